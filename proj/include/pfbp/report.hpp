#pragma once

// JSON and CSV renderings of selection results, evidence matrices, models
// and ground-truth comparisons.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfbp/data.hpp"
#include "pfbp/engine.hpp"
#include "pfbp/error.hpp"
#include "pfbp/meta.hpp"
#include "pfbp/model.hpp"

namespace pfbp {

struct TruthMetrics {
    double precision = 0.0;
    double recall = 0.0;
    std::size_t true_positives = 0;
};

/// Precision and recall of `selected` against `truth`. An empty selection has
/// precision 1 only when the truth is empty too; an empty truth has recall 1.
inline TruthMetrics truth_metrics(std::span<const std::size_t> selected, std::span<const std::size_t> truth) {
    TruthMetrics m;
    for (auto s : selected)
        if (std::find(truth.begin(), truth.end(), s) != truth.end()) ++m.true_positives;
    const double tp = static_cast<double>(m.true_positives);
    m.precision = selected.empty() ? (truth.empty() ? 1.0 : 0.0) : tp / static_cast<double>(selected.size());
    m.recall = truth.empty() ? 1.0 : tp / static_cast<double>(truth.size());
    return m;
}

inline nlohmann::json model_json(const CombinedModel& m) {
    std::vector<double> beta(m.beta.data(), m.beta.data() + m.beta.size());
    return {{"feature_ids", m.feature_ids}, {"beta", beta}, {"n_local_models", m.n_local_models}};
}

inline nlohmann::json plan_summary_json(const PartitionPlan& p) {
    return {{"n_samples", p.n_samples}, {"n_features", p.n_features}, {"s", p.s},
            {"ns", p.ns},               {"f", p.f},                   {"nf", p.nf},
            {"C", p.C},                 {"Q", p.Q},                   {"rng_seed", p.rng_seed},
            {"undersized", p.undersized}};
}

/// Result document; everything time-dependent sits under "timings" so the
/// rest is reproducible byte for byte.
inline nlohmann::json result_json(const SelectionResult& r, const PartitionPlan& plan, const Dataset& ds) {
    nlohmann::json j;
    j["selected"] = r.selected;
    std::vector<std::string> names;
    for (auto id : r.selected) names.push_back(ds.feature_name(id));
    j["selected_names"] = names;
    j["runs_executed"] = r.runs_executed;
    j["test_failures"] = r.test_failures;
    j["plan"] = plan_summary_json(plan);
    nlohmann::json trace = nlohmann::json::array();
    std::vector<double> seconds;
    for (const auto& it : r.trace) {
        nlohmann::json t;
        t["run"] = it.run;
        t["phase"] = to_string(it.phase);
        t["candidate"] = it.candidate ? nlohmann::json(*it.candidate) : nlohmann::json(nullptr);
        t["combined_log_p"] = it.combined_log_p;
        t["accepted"] = it.accepted;
        t["groups_processed"] = it.groups_processed;
        t["remaining_before"] = it.remaining_before;
        t["remaining_after"] = it.remaining_after;
        t["alive_trajectory"] = it.alive_trajectory;
        t["dropped"] = it.dropped;
        t["stopped"] = it.stopped;
        t["early_return"] = it.early_return;
        t["test_failures"] = it.test_failures;
        t["broadcast"] = it.broadcast;
        t["selected_after"] = it.selected_after;
        if (it.model) t["model"] = model_json(*it.model);
        trace.push_back(std::move(t));
        seconds.push_back(it.seconds);
    }
    j["trace"] = std::move(trace);
    j["model"] = r.final_model ? model_json(*r.final_model) : nlohmann::json(nullptr);
    double total = 0.0;
    for (double s : seconds) total += s;
    j["timings"] = {{"iteration_seconds", seconds}, {"selection_seconds", total}};
    return j;
}

/// Reads {"truth": [...]} (or a bare array) of feature ids.
inline std::vector<std::size_t> load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError(LoadErrorKind::Io, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        if (j.is_object()) return j.at("truth").get<std::vector<std::size_t>>();
        return j.get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(LoadErrorKind::Parse, "bad truth file " + path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw LoadError(LoadErrorKind::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw LoadError(LoadErrorKind::Io, "write failed for " + path.string());
}

/// Pi and Lambda of one iteration as two CSV files with feature ids as header.
inline void dump_evidence_csv(const std::filesystem::path& dir, const EvidenceSnapshot& snap) {
    std::filesystem::create_directories(dir);
    const std::string stem = "run" + std::to_string(snap.run) + "_iter" + std::to_string(snap.iteration) + "_" +
                             to_string(snap.phase);
    auto write = [&](const std::string& suffix, const Eigen::MatrixXd& m) {
        std::ofstream out(dir / (stem + suffix));
        if (!out) throw LoadError(LoadErrorKind::Io, "cannot write evidence dump in " + dir.string());
        const auto& ids = snap.evidence->column_ids;
        for (std::size_t c = 0; c < ids.size(); ++c) out << (c ? "," : "") << ids[c];
        out << '\n';
        out.precision(17);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
            out << '\n';
        }
    };
    write("_pi.csv", snap.evidence->log_p);
    write("_lambda.csv", snap.evidence->log_lik);
}

inline void write_accuracy_curve_csv(const std::filesystem::path& path, std::span<const std::size_t> n_selected,
                                     std::span<const double> accuracies) {
    std::ofstream out(path);
    if (!out) throw LoadError(LoadErrorKind::Io, "cannot write " + path.string());
    out << "iteration,n_selected,accuracy\n";
    out.precision(17);
    for (std::size_t i = 0; i < accuracies.size(); ++i)
        out << i + 1 << ',' << n_selected[i] << ',' << accuracies[i] << '\n';
}

}  // namespace pfbp
