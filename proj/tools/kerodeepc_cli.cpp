// kerodeepc: dataset generation, predictor validation, closed-loop tracking and benchmarks
// for the Van der Pol study.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "kerodeepc/errors.hpp"
#include "kerodeepc/experiment.hpp"

namespace fs = std::filesystem;
using namespace kerodeepc;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalFailure = 2, kNonConvergence = 3 };

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

experiment::ExperimentConfig load_config(const Common& c) {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (c.seed) overrides = experiment::seed_overrides(*c.seed);
    return experiment::ExperimentConfig::load(c.config, overrides);
}

fs::path output_dir(const Common& c, const experiment::ExperimentConfig& cfg) {
    return c.out.empty() ? cfg.output_dir : fs::path(c.out);
}

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

datagen::Dataset dataset_for(const experiment::ExperimentConfig& cfg, const std::string& dir) {
    if (!dir.empty()) return datagen::load_dataset(dir);
    return experiment::build_product_data(cfg).dataset;
}

int cmd_datagen(const Common& c) {
    const auto cfg = load_config(c);
    const fs::path out = output_dir(c, cfg);
    const auto data = experiment::build_product_data(cfg);
    datagen::save_dataset(data.dataset, out);

    std::ostringstream os;
    os << "kind,x1,x2,config_hash\n";
    const auto& visited = data.initial.visited;
    for (Index j = 0; j < visited.cols(); ++j) {
        os << "visited," << num(visited(0, j)) << ',' << num(visited(1, j)) << ',' << cfg.hash << '\n';
    }
    const auto& x0 = data.dataset.x0;
    for (Index j = 0; j < x0.cols(); ++j) {
        os << "centroid," << num(x0(0, j)) << ',' << num(x0(1, j)) << ',' << cfg.hash << '\n';
    }
    experiment::write_atomically(out / "centroids.csv", os.str());
    std::cout << "datagen: Tu=" << data.dataset.tu() << " Tx=" << data.dataset.tx()
              << " N=" << data.dataset.horizon << " -> " << out.string()
              << " (config " << cfg.hash << ")\n";
    return kOk;
}

int cmd_predict_eval(const Common& c, const std::string& dataset_dir) {
    const auto cfg = load_config(c);
    const fs::path out = output_dir(c, cfg);
    auto dataset = dataset_for(cfg, dataset_dir);
    const Index t = dataset.tu() * dataset.tx();
    const auto product = experiment::fit_product(cfg, std::move(dataset));
    const auto stacked = experiment::fit_stacked(cfg, experiment::build_stacked_data(cfg, t));
    const auto validation = experiment::build_validation_data(cfg);
    const auto e = experiment::evaluate_predictions(product, &stacked, validation);

    std::ostringstream os;
    os << "rollout,product_error,reduced_error,stacked_error,product_reduced_gap,config_hash\n";
    for (Index i = 0; i < e.product.size(); ++i) {
        os << i << ',' << num(e.product(i)) << ',' << num(e.reduced(i)) << ',' << num(e.stacked(i))
           << ',' << num(e.product_reduced_gap(i)) << ',' << cfg.hash << '\n';
    }
    os << "mean," << num(e.mean_product) << ',' << num(e.mean_reduced) << ','
       << num(e.mean_stacked) << ',' << num(e.product_reduced_gap.maxCoeff()) << ',' << cfg.hash
       << '\n';
    experiment::write_atomically(out / "predictions.csv", os.str());
    std::cout << "predict-eval: T=" << t << " mean error product=" << e.mean_product
              << " reduced=" << e.mean_reduced << " stacked=" << e.mean_stacked
              << " (config " << cfg.hash << ")\n";
    return kOk;
}

int cmd_track(const Common& c, const std::string& dataset_dir, const std::string& method,
              bool strict_flag) {
    const auto cfg = load_config(c);
    const bool strict = strict_flag || cfg.strict;
    const fs::path out = output_dir(c, cfg);
    const auto plant = experiment::make_plant(cfg);

    std::optional<predictor::ProductPredictor> product;
    std::optional<predictor::StackedPredictor> stacked;
    std::unique_ptr<controller::Controller> ctrl;
    if (method == "efficient" || method == "full-product") {
        product.emplace(experiment::fit_product(cfg, dataset_for(cfg, dataset_dir)));
        if (method == "efficient") {
            ctrl = std::make_unique<controller::EfficientController>(
                *product, experiment::control_config(cfg, false));
        } else {
            ctrl = std::make_unique<controller::FullProductController>(
                *product, experiment::control_config(cfg, true));
        }
    } else if (method == "full-stacked") {
        stacked.emplace(experiment::fit_stacked(
            cfg, experiment::build_stacked_data(cfg, cfg.product_size())));
        ctrl = std::make_unique<controller::FullStackedController>(
            *stacked, experiment::control_config(cfg, true));
    } else {
        ctrl = std::make_unique<controller::NmpcController>(plant,
                                                            experiment::control_config(cfg, false));
    }

    const auto tr = experiment::run_tracking(cfg, *ctrl);
    std::ostringstream os;
    os << "k,y,r,u,solve_time_s,status,config_hash\n";
    for (Index k = 0; k < tr.applied_inputs.cols(); ++k) {
        os << k << ',' << num(tr.measured_outputs(0, k)) << ',' << num(tr.references(0, k)) << ','
           << num(tr.applied_inputs(0, k)) << ',' << num(tr.solve_times[k]) << ','
           << (tr.failures[k].empty() ? solver::to_string(tr.statuses[k]) : "failed") << ','
           << cfg.hash << '\n';
    }
    os << "summary,mean_tracking_error=" << num(tr.mean_tracking_error)
       << ",mean_solve_time_s=" << num(tr.mean_solve_time)
       << ",non_converged=" << tr.non_converged << ",," << cfg.hash << '\n';
    experiment::write_atomically(out / ("tracking_" + method + ".csv"), os.str());
    std::cout << "track(" << method << "): mean tracking error " << tr.mean_tracking_error
              << ", mean solve time " << tr.mean_solve_time << " s, non-converged steps "
              << tr.non_converged << " (config " << cfg.hash << ")\n";
    for (size_t k = 0; k < tr.failures.size(); ++k) {
        if (!tr.failures[k].empty()) std::cerr << "step " << k << ": " << tr.failures[k] << '\n';
    }
    if (strict && tr.non_converged > 0) return kNonConvergence;
    return kOk;
}

int cmd_bench(const Common& c) {
    const auto cfg = load_config(c);
    const fs::path out = output_dir(c, cfg);
    const auto records = experiment::run_bench(cfg, &std::cout);
    experiment::write_report(out / "report.csv", records, cfg.hash);
    std::cout << "bench: report written to " << (out / "report.csv").string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernelized-operator data-enabled predictive control experiments"};
    app.require_subcommand(1);

    Common common;
    std::string dataset_dir;
    std::string method = "efficient";
    bool strict = false;
    std::uint64_t seed_value = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "experiment config file")->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory (default: output.dir)");
        sub->add_option("--seed", seed_value, "override every data seed");
    };

    auto* datagen_cmd = app.add_subcommand("datagen", "generate the product-kernel dataset");
    add_common(datagen_cmd);
    auto* predict_cmd = app.add_subcommand("predict-eval", "validate product and stacked predictors");
    add_common(predict_cmd);
    predict_cmd->add_option("--dataset", dataset_dir, "dataset directory (default: regenerate)");
    auto* track_cmd = app.add_subcommand("track", "closed-loop reference tracking");
    add_common(track_cmd);
    track_cmd->add_option("--dataset", dataset_dir, "dataset directory (default: regenerate)");
    track_cmd->add_option("--method", method, "controller")
        ->check(CLI::IsMember({"efficient", "full-product", "full-stacked", "nmpc"}));
    track_cmd->add_flag("--strict", strict, "exit with status 3 if any step does not converge");
    auto* bench_cmd = app.add_subcommand("bench", "timing and accuracy report");
    add_common(bench_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    for (auto* sub : {datagen_cmd, predict_cmd, track_cmd, bench_cmd}) {
        if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed_value;
    }

    try {
        if (datagen_cmd->parsed()) return cmd_datagen(common);
        if (predict_cmd->parsed()) return cmd_predict_eval(common, dataset_dir);
        if (track_cmd->parsed()) return cmd_track(common, dataset_dir, method, strict);
        return cmd_bench(common);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const FactorizationError& e) {
        std::cerr << "numerical failure: " << e.what()
                  << " (hint: increase kernel.jitter_* or widen the kernel)\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
}
