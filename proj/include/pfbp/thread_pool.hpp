#pragma once

// Fixed-size worker pool with a blocking parallel_for; each call is a barrier.

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pfbp {

class ThreadPool {
public:
    explicit ThreadPool(std::size_t workers) : n_workers_(std::max<std::size_t>(1, workers)) {
        for (std::size_t w = 1; w < n_workers_; ++w) threads_.emplace_back([this] { worker_loop(); });
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    ~ThreadPool() {
        {
            std::lock_guard lock(mu_);
            shutdown_ = true;
        }
        wake_.notify_all();
        for (auto& t : threads_) t.join();
    }

    std::size_t size() const { return n_workers_; }

    /// Runs fn(0..n-1) across the pool (the calling thread participates) and
    /// returns once every index has finished. The first exception is rethrown.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
        if (n == 0) return;
        if (threads_.empty() || n == 1) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        {
            std::lock_guard lock(mu_);
            job_ = &fn;
            job_size_ = n;
            next_ = 0;
            pending_ = n;
            error_ = nullptr;
            ++generation_;
        }
        wake_.notify_all();
        run_indices();
        std::unique_lock lock(mu_);
        done_.wait(lock, [this] { return pending_ == 0; });
        job_ = nullptr;
        if (error_) std::rethrow_exception(error_);
    }

private:
    void run_indices() {
        while (true) {
            std::size_t i;
            const std::function<void(std::size_t)>* job;
            {
                std::lock_guard lock(mu_);
                if (!job_ || next_ >= job_size_) return;
                i = next_++;
                job = job_;
            }
            try {
                (*job)(i);
            } catch (...) {
                std::lock_guard lock(mu_);
                if (!error_) error_ = std::current_exception();
            }
            {
                std::lock_guard lock(mu_);
                if (--pending_ == 0) done_.notify_all();
            }
        }
    }

    void worker_loop() {
        std::size_t seen = 0;
        while (true) {
            {
                std::unique_lock lock(mu_);
                wake_.wait(lock, [&] { return shutdown_ || generation_ != seen; });
                if (shutdown_) return;
                seen = generation_;
            }
            run_indices();
        }
    }

    std::size_t n_workers_;
    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable wake_, done_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t job_size_ = 0, next_ = 0, pending_ = 0, generation_ = 0;
    std::exception_ptr error_;
    bool shutdown_ = false;
};

}  // namespace pfbp
