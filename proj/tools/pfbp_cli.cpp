// pfbp command-line driver: select, gen-bn, gen-snp, agreement, bench.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pfbp/pfbp.hpp"

namespace fs = std::filesystem;
using pfbp::RunConfig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitLoad = 3;
constexpr int kExitRuntime = 4;

struct Subcommand {
    CLI::App* app = nullptr;
    RunConfig defaults;
    RunConfig cli;
    std::string config_file;
    std::map<std::string, CLI::Option*> options;
};

void register_options(Subcommand& sub, unsigned mask) {
    for (const auto& f : pfbp::field_table()) {
        if (!(f.commands & mask)) continue;
        const std::string flag = std::string("--") + f.key;
        std::visit(
            [&](auto member) {
                auto& target = sub.cli.*member;
                sub.options[f.key] = sub.app->add_option(flag, target, f.help)->capture_default_str();
            },
            f.ref);
    }
    sub.app->add_option("--config", sub.config_file, "JSON run configuration; flags given explicitly override it")
        ->check(CLI::ExistingFile);
}

/// Config file (if any) overlaid with the flags the user actually typed.
RunConfig resolve(const Subcommand& sub, const std::string& command) {
    RunConfig cfg = sub.cli;
    if (!sub.config_file.empty()) {
        std::ifstream in(sub.config_file);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw pfbp::ConfigError("cannot parse " + sub.config_file + ": " + e.what());
        }
        RunConfig base = sub.defaults;
        pfbp::from_json(j, base);
        if (base.command != command)
            throw pfbp::ConfigError("config file is for '" + base.command + "', not '" + command + "'");
        for (const auto& f : pfbp::field_table())
            if (auto it = sub.options.find(f.key); it != sub.options.end() && it->second->count() > 0)
                std::visit([&](auto member) { base.*member = sub.cli.*member; }, f.ref);
        cfg = base;
    }
    cfg.command = command;
    pfbp::validate(cfg);
    return cfg;
}

void write_sidecar(const fs::path& output, const RunConfig& cfg) {
    nlohmann::json j;
    j["version"] = pfbp::kVersion;
    j["config"] = cfg;
    pfbp::write_json_file(output.string() + ".config.json", j);
}

pfbp::DataFormat output_format(const RunConfig& cfg) {
    if (cfg.format == "bin") return pfbp::DataFormat::Binary;
    if (cfg.format == "csv") return pfbp::DataFormat::Csv;
    return pfbp::format_from_path(cfg.out);
}

int cmd_select(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto full = pfbp::load_dataset(cfg.data, pfbp::TargetColumn::parse(cfg.target));
    full.validate(true);
    std::optional<std::vector<std::size_t>> truth;
    if (!cfg.truth.empty()) truth = pfbp::load_truth(cfg.truth);

    std::optional<pfbp::HoldoutSplit> split;
    if (cfg.holdout > 0.0) split = pfbp::split_holdout(full, cfg.holdout, cfg.seed);
    const pfbp::Dataset& train = split ? split->train : full;
    train.validate(true);

    const auto plan = pfbp::make_partition_plan(train, pfbp::partition_params(cfg));
    if (plan.undersized)
        std::cerr << "warning: subset size s=" << plan.s << " exceeds the " << plan.n_samples
                  << " available rows; using a single sample subset\n";

    auto ecfg = pfbp::engine_config(cfg);
    if (!cfg.dump_evidence.empty())
        ecfg.evidence_observer = [dir = fs::path(cfg.dump_evidence)](const pfbp::EvidenceSnapshot& snap) {
            pfbp::dump_evidence_csv(dir, snap);
        };
    const auto result = pfbp::pfbp(train, plan, ecfg);

    auto j = pfbp::result_json(result, plan, train);
    j["version"] = pfbp::kVersion;
    if (truth) {
        const auto m = pfbp::truth_metrics(result.selected, *truth);
        j["truth"] = {{"ids", *truth}, {"precision", m.precision}, {"recall", m.recall},
                      {"true_positives", m.true_positives}};
    }
    if (split) {
        std::vector<pfbp::CombinedModel> models;
        std::vector<std::size_t> sizes;
        for (const auto& it : result.trace)
            if (it.model) {
                models.push_back(*it.model);
                sizes.push_back(it.model->feature_ids.size());
            }
        const auto curve = pfbp::accuracy_curve(split->holdout, models);
        nlohmann::json h;
        h["fraction"] = cfg.holdout;
        h["n_samples"] = split->holdout.n_samples();
        h["accuracy_curve"] = curve;
        if (result.final_model) h["final_accuracy"] = pfbp::accuracy(*result.final_model, split->holdout);
        j["holdout"] = h;
        if (!cfg.curve.empty()) {
            pfbp::write_accuracy_curve_csv(cfg.curve, sizes, curve);
            write_sidecar(cfg.curve, cfg);
        }
    }
    j["timings"]["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    pfbp::write_json_file(cfg.out, j);
    write_sidecar(cfg.out, cfg);
    std::cout << "selected " << result.selected.size() << " feature(s):";
    for (auto id : result.selected) std::cout << ' ' << train.feature_name(id);
    std::cout << '\n';
    return kExitOk;
}

void write_truth(const RunConfig& cfg, const nlohmann::json& j) {
    if (cfg.truth.empty()) return;
    pfbp::write_json_file(cfg.truth, j);
    write_sidecar(cfg.truth, cfg);
}

int cmd_gen_bn(const RunConfig& cfg) {
    const auto net = pfbp::generate_bn(cfg.nodes, cfg.connectivity, cfg.error_sd, cfg.class_freq, cfg.seed);
    const auto sample = pfbp::sample_bn(net, cfg.samples, pfbp::detail::mix_seed(cfg.seed, 1));
    pfbp::save_dataset(cfg.out, sample.data, output_format(cfg));
    write_sidecar(cfg.out, cfg);
    std::vector<std::string> names;
    for (auto id : sample.truth) names.push_back(sample.data.feature_name(id));
    write_truth(cfg, {{"truth", sample.truth},
                      {"names", names},
                      {"target_node", net.target_index},
                      {"edges", net.edge_count()},
                      {"threshold", net.threshold},
                      {"class_frequency", sample.data.class_frequency()}});
    std::cout << "wrote " << cfg.samples << " x " << sample.data.n_features() << " to " << cfg.out
              << "; Markov blanket size " << sample.truth.size() << '\n';
    return kExitOk;
}

int cmd_gen_snp(const RunConfig& cfg) {
    const auto sample = pfbp::generate_snp(cfg.samples, cfg.snps, cfg.causal, cfg.heritability, cfg.seed);
    pfbp::save_dataset(cfg.out, sample.data, output_format(cfg));
    write_sidecar(cfg.out, cfg);
    write_truth(cfg, {{"truth", sample.truth}, {"class_frequency", sample.data.class_frequency()}});
    std::cout << "wrote " << cfg.samples << " x " << cfg.snps << " to " << cfg.out << '\n';
    return kExitOk;
}

int cmd_agreement(const RunConfig& cfg) {
    pfbp::AgreementParams p;
    p.n_nodes = cfg.nodes;
    p.connectivity = cfg.connectivity;
    p.class_freqs = cfg.class_freqs;
    p.error_sds = cfg.error_sds;
    p.conditioning_sizes.assign(cfg.conditioning.begin(), cfg.conditioning.end());
    p.samples_per_subset.assign(cfg.sample_grid.begin(), cfg.sample_grid.end());
    p.subsets.assign(cfg.subset_grid.begin(), cfg.subset_grid.end());
    p.repetitions = cfg.repetitions;
    p.seed = cfg.seed;
    p.workers = cfg.workers;
    p.logistic = pfbp::logistic_options(cfg);
    const auto cells = pfbp::run_agreement(p);
    std::ofstream out(cfg.out);
    if (!out) throw pfbp::LoadError(pfbp::LoadErrorKind::Io, "cannot write " + cfg.out);
    out << "class_freq,conditioning,samples_per_subset,subsets,repetitions,agreements,agreement\n";
    for (const auto& c : cells)
        out << c.class_freq << ',' << c.conditioning << ',' << c.samples_per_subset << ',' << c.subsets << ','
            << c.repetitions << ',' << c.agreements << ',' << c.agreement() << '\n';
    out.close();
    write_sidecar(cfg.out, cfg);
    std::cout << "wrote " << cells.size() << " agreement cells to " << cfg.out << '\n';
    return kExitOk;
}

int cmd_bench(const RunConfig& cfg) {
    pfbp::BenchParams p;
    p.n_nodes = cfg.nodes;
    p.connectivity = cfg.connectivity;
    p.n_samples = cfg.samples;
    p.max_vars = cfg.max_vars;
    p.max_runs = cfg.runs;
    p.c_rule = cfg.c_rule;
    p.rule = pfbp::parse_rule(cfg.rule);
    p.workers.assign(cfg.workers_grid.begin(), cfg.workers_grid.end());
    p.repeats = cfg.repeats;
    p.networks = cfg.networks;
    p.seed = cfg.seed;
    p.bootstrap = pfbp::bootstrap_config(cfg);
    const auto points = pfbp::run_bench(p);
    std::ofstream out(cfg.out);
    if (!out) throw pfbp::LoadError(pfbp::LoadErrorKind::Io, "cannot write " + cfg.out);
    out << "axis,n_features,n_samples,workers,seconds,relative,selected\n";
    for (const auto& b : points)
        out << b.axis << ',' << b.n_features << ',' << b.n_samples << ',' << b.workers << ',' << b.seconds << ','
            << b.relative << ',' << b.selected << '\n';
    out.close();
    write_sidecar(cfg.out, cfg);
    for (const auto& b : points)
        std::cout << b.axis << " p=" << b.n_features << " n=" << b.n_samples << " w=" << b.workers << ": "
                  << b.seconds << " s (x" << b.relative << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parallel forward-backward feature selection with pruning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pfbp::kVersion);

    const std::pair<const char*, const char*> commands[] = {
        {"select", "select features from a dataset"},
        {"gen-bn", "sample a dataset from a random Bayesian network"},
        {"gen-snp", "generate SNP genotypes with an additive binary phenotype"},
        {"agreement", "global vs combined p-value agreement experiment"},
        {"bench", "runtime scaling benchmark"},
    };
    std::map<std::string, Subcommand> subs;
    for (const auto& [name, help] : commands) {
        auto& sub = subs[name];
        sub.app = app.add_subcommand(name, help);
        sub.defaults.command = name;
        sub.defaults.workers = pfbp::default_workers();
        if (std::string(name) == "bench") {
            sub.defaults.samples = 20000;
            sub.defaults.runs = 1;
        }
        sub.cli = sub.defaults;
        register_options(sub, pfbp::command_mask(name));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    std::string command;
    for (auto& [name, sub] : subs)
        if (sub.app->parsed()) command = name;

    RunConfig cfg;
    try {
        cfg = resolve(subs.at(command), command);
    } catch (const pfbp::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (command == "select") return cmd_select(cfg);
        if (command == "gen-bn") return cmd_gen_bn(cfg);
        if (command == "gen-snp") return cmd_gen_snp(cfg);
        if (command == "agreement") return cmd_agreement(cfg);
        return cmd_bench(cfg);
    } catch (const pfbp::LoadError& e) {
        std::cerr << "load error: " << e.what() << '\n';
        return kExitLoad;
    } catch (const pfbp::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
