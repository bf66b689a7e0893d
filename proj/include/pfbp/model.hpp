#pragma once

// Global predictive model built by averaging local logistic coefficient
// vectors, plus prediction and accuracy evaluation.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfbp/citest.hpp"
#include "pfbp/data.hpp"
#include "pfbp/error.hpp"

namespace pfbp {

struct CombinedModel {
    std::vector<std::size_t> feature_ids;
    Eigen::VectorXd beta;  // intercept first
    std::size_t n_local_models = 0;
};

/// Element-wise mean of the local coefficient vectors.
inline CombinedModel combine_models(std::span<const Eigen::VectorXd> local_betas,
                                    std::vector<std::size_t> feature_ids = {}) {
    if (local_betas.empty()) throw PreconditionError("combine_models needs at least one local model");
    const Eigen::Index d = local_betas.front().size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (const auto& b : local_betas) {
        if (b.size() != d) throw PreconditionError("local coefficient vectors differ in length");
        sum += b;
    }
    CombinedModel m;
    m.beta = sum / static_cast<double>(local_betas.size());
    m.n_local_models = local_betas.size();
    if (feature_ids.empty())
        for (Eigen::Index k = 1; k < d; ++k) feature_ids.push_back(static_cast<std::size_t>(k - 1));
    if (feature_ids.size() + 1 != static_cast<std::size_t>(d))
        throw PreconditionError("feature id count does not match coefficient length");
    m.feature_ids = std::move(feature_ids);
    return m;
}

/// P(y = 1 | row) for every row of `ds`, strictly inside (0, 1).
inline std::vector<double> predict(const CombinedModel& model, const Dataset& ds) {
    for (auto id : model.feature_ids)
        if (id >= ds.n_features()) throw PreconditionError("dataset lacks model feature " + std::to_string(id));
    detail::require(model.beta.size() == static_cast<Eigen::Index>(model.feature_ids.size() + 1),
                    "model coefficient length mismatch");
    Eigen::VectorXd eta = Eigen::VectorXd::Constant(ds.values.rows(), model.beta[0]);
    for (std::size_t k = 0; k < model.feature_ids.size(); ++k)
        eta += model.beta[static_cast<Eigen::Index>(k + 1)] * ds.values.col(static_cast<Eigen::Index>(model.feature_ids[k]));
    std::vector<double> p(static_cast<std::size_t>(eta.size()));
    const double hi = std::nextafter(1.0, 0.0);
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        p[static_cast<std::size_t>(i)] = std::clamp(detail::sigmoid(eta[i]), DBL_MIN, hi);
    return p;
}

/// Fraction of rows classified correctly at threshold 0.5.
inline double accuracy(const CombinedModel& model, const Dataset& ds) {
    if (ds.n_samples() == 0) throw PreconditionError("accuracy needs a non-empty dataset");
    const auto p = predict(model, ds);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i) hits += (p[i] > 0.5 ? 1 : 0) == ds.target[i];
    return static_cast<double>(hits) / static_cast<double>(p.size());
}

/// One accuracy per model, e.g. one model per forward iteration.
inline std::vector<double> accuracy_curve(const Dataset& holdout, std::span<const CombinedModel> models) {
    if (holdout.n_samples() == 0) throw PreconditionError("holdout set is empty");
    std::vector<double> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back(accuracy(m, holdout));
    return out;
}

/// Single logistic model on all rows of `ds` restricted to `features`.
inline CombinedModel fit_full_model(const Dataset& ds, std::span<const std::size_t> features,
                                    const LogisticOptions& opts = {}) {
    Eigen::MatrixXd X(ds.values.rows(), static_cast<Eigen::Index>(features.size()));
    for (std::size_t k = 0; k < features.size(); ++k)
        X.col(static_cast<Eigen::Index>(k)) = ds.values.col(static_cast<Eigen::Index>(features[k]));
    const auto fit = fit_logistic(X, ds.target, opts);
    CombinedModel m;
    m.feature_ids.assign(features.begin(), features.end());
    m.beta = fit.beta;
    m.n_local_models = 1;
    return m;
}

}  // namespace pfbp
