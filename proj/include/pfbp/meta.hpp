#pragma once

// Fisher combination of local log p-values and the master-side evidence
// matrices (local log p-values and local log-likelihoods).

#include <algorithm>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pfbp/citest.hpp"
#include "pfbp/error.hpp"

namespace pfbp {

struct CombinedP {
    double statistic = 0.0;  // -2 * sum of log p
    double log_p = 0.0;
};

/// Fisher's method: -2 sum ln p_i against chi-square with 2K df.
inline CombinedP fisher_combine(std::span<const double> log_ps) {
    if (log_ps.empty()) throw PreconditionError("fisher_combine needs at least one p-value");
    double sum = 0.0;
    for (double lp : log_ps) {
        if (!(lp <= 0.0)) throw PreconditionError("log p-values must be <= 0");
        sum += lp;
    }
    CombinedP out;
    out.statistic = -2.0 * sum;
    out.log_p = chisq_log_sf(out.statistic, 2 * log_ps.size());
    return out;
}

/// Rows are processed sample subsets in order, columns are alive features.
struct EvidenceMatrices {
    Eigen::MatrixXd log_p;    // Pi
    Eigen::MatrixXd log_lik;  // Lambda
    std::vector<std::size_t> column_ids;

    std::size_t rows_filled() const { return static_cast<std::size_t>(log_p.rows()); }
    std::size_t n_columns() const { return column_ids.size(); }

    static EvidenceMatrices empty(std::vector<std::size_t> ids) {
        EvidenceMatrices ev;
        ev.log_p.resize(0, static_cast<Eigen::Index>(ids.size()));
        ev.log_lik.resize(0, static_cast<Eigen::Index>(ids.size()));
        ev.column_ids = std::move(ids);
        return ev;
    }

    std::ptrdiff_t column_of(std::size_t feature) const {
        auto it = std::find(column_ids.begin(), column_ids.end(), feature);
        return it == column_ids.end() ? -1 : it - column_ids.begin();
    }
};

/// Column-wise Fisher statistics over all filled rows.
inline Eigen::VectorXd fisher_statistics(const EvidenceMatrices& ev) {
    if (ev.rows_filled() == 0) throw PreconditionError("no evidence rows have been processed");
    return -2.0 * ev.log_p.colwise().sum().transpose();
}

/// Column-wise combined results (statistic and log p) over all filled rows.
inline std::vector<CombinedP> combine_columns_full(const EvidenceMatrices& ev) {
    const Eigen::VectorXd stats = fisher_statistics(ev);
    const std::size_t df = 2 * ev.rows_filled();
    std::vector<CombinedP> out(ev.n_columns());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j].statistic = stats[static_cast<Eigen::Index>(j)];
        out[j].log_p = chisq_log_sf(std::max(0.0, out[j].statistic), df);
    }
    return out;
}

/// Combined log p-value per alive feature, in column order.
inline std::vector<double> combine_columns(const EvidenceMatrices& ev) {
    std::vector<double> out;
    for (const auto& c : combine_columns_full(ev)) out.push_back(c.log_p);
    return out;
}

/// Appends one group's rows; column ids must match the current columns.
inline void append_group(EvidenceMatrices& ev, const Eigen::MatrixXd& log_p_rows, const Eigen::MatrixXd& log_lik_rows,
                         std::span<const std::size_t> ids) {
    if (!std::equal(ids.begin(), ids.end(), ev.column_ids.begin(), ev.column_ids.end()))
        throw PreconditionError("appended evidence columns do not match alive features");
    if (log_p_rows.cols() != static_cast<Eigen::Index>(ids.size()) || log_lik_rows.rows() != log_p_rows.rows() ||
        log_lik_rows.cols() != log_p_rows.cols())
        throw PreconditionError("appended evidence blocks have inconsistent shapes");
    const Eigen::Index old = ev.log_p.rows();
    const Eigen::Index add = log_p_rows.rows();
    ev.log_p.conservativeResize(old + add, Eigen::NoChange);
    ev.log_lik.conservativeResize(old + add, Eigen::NoChange);
    ev.log_p.bottomRows(add) = log_p_rows;
    ev.log_lik.bottomRows(add) = log_lik_rows;
}

/// Removes the columns of the given features; survivors keep their order.
inline void drop_columns(EvidenceMatrices& ev, std::span<const std::size_t> removed) {
    if (removed.empty()) return;
    std::vector<bool> drop(ev.column_ids.size(), false);
    for (auto id : removed) {
        const auto c = ev.column_of(id);
        if (c < 0) throw PreconditionError("cannot drop unknown feature " + std::to_string(id));
        drop[static_cast<std::size_t>(c)] = true;
    }
    std::vector<Eigen::Index> keep;
    std::vector<std::size_t> ids;
    for (std::size_t c = 0; c < drop.size(); ++c)
        if (!drop[c]) {
            keep.push_back(static_cast<Eigen::Index>(c));
            ids.push_back(ev.column_ids[c]);
        }
    Eigen::MatrixXd lp(ev.log_p.rows(), static_cast<Eigen::Index>(keep.size()));
    Eigen::MatrixXd ll(ev.log_lik.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        lp.col(static_cast<Eigen::Index>(k)) = ev.log_p.col(keep[k]);
        ll.col(static_cast<Eigen::Index>(k)) = ev.log_lik.col(keep[k]);
    }
    ev.log_p = std::move(lp);
    ev.log_lik = std::move(ll);
    ev.column_ids = std::move(ids);
}

/// Keeps exactly the listed features (which must all be present).
inline void retain_columns(EvidenceMatrices& ev, std::span<const std::size_t> keep) {
    std::vector<std::size_t> removed;
    for (auto id : ev.column_ids)
        if (std::find(keep.begin(), keep.end(), id) == keep.end()) removed.push_back(id);
    drop_columns(ev, removed);
}

}  // namespace pfbp
