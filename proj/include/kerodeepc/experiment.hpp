#pragma once

#include <cstdint>
#include <algorithm>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kerodeepc/config.hpp"
#include "kerodeepc/controller.hpp"
#include "kerodeepc/datagen.hpp"
#include "kerodeepc/kernels.hpp"
#include "kerodeepc/plant.hpp"
#include "kerodeepc/predictor.hpp"

namespace kerodeepc::experiment {

/// Everything the Van der Pol study needs, loaded from a `section.key = value` file.
struct ExperimentConfig {
    // plant
    double mu = 1.0;
    double ts = 0.1;

    // data
    Vector x_start;  ///< start of the excitation rollouts
    datagen::Box state_box;
    Index tu_ini = 100;
    Index tx = 20;
    Index tu = 20;
    Index horizon = 10;
    datagen::ExcitationConfig excitation;  ///< band, amplitude and sinusoid settings; length and seed set per use
    std::uint64_t seed_ini = 1;
    std::uint64_t seed_u = 2;
    std::uint64_t seed_stacked = 3;
    std::uint64_t seed_validation = 4;
    datagen::CentroidInit kmeans_init = datagen::CentroidInit::Halton;
    Index kmeans_max_iter = 300;
    std::uint64_t kmeans_seed = 5;

    // kernels
    kernels::KernelSpec ku = kernels::KernelSpec::gaussian(50.0);
    kernels::KernelSpec kx = kernels::KernelSpec::gaussian(3.0);
    double stacked_sigma_state = 3.0;
    double stacked_sigma_input = 50.0;
    double jitter_u = -1.0;  ///< negative selects the default jitter
    double jitter_x = -1.0;
    double jitter_stacked = -1.0;

    // control
    controller::ControlConfig control;
    controller::PiecewiseConstantReference reference;
    Index steps = 200;
    Vector x_init;
    Index full_max_outer = 50;
    Index full_max_inner = 200;
    bool strict = false;

    // validation
    Index validation_rollouts = 100;

    // bench
    Index bench_repetitions = 5;
    Index bench_large_tu = 50;
    Index bench_large_tx = 200;
    Index bench_large_tu_ini = 1000;
    Index bench_control_steps = 5;  ///< closed-loop steps timed for the full formulations

    std::filesystem::path output_dir = "out";
    std::string hash;  ///< of the normalized key/value pairs

    /// Parses and validates; errors carry "<file>:<line>:" locations.
    static ExperimentConfig from_file(const config::KeyValueFile& file);
    static ExperimentConfig load(const std::filesystem::path& path,
                                 const std::vector<std::pair<std::string, std::string>>& overrides = {});
    /// Defaults of the Van der Pol study, with no file at all.
    static ExperimentConfig defaults();

    [[nodiscard]] Index product_size() const noexcept { return tu * tx; }
    [[nodiscard]] kernels::KernelSpec stacked_kernel() const;
};

/// Keys understood by ExperimentConfig::from_file.
[[nodiscard]] const std::set<std::string>& known_keys();

/// Seed overrides for `--seed s`: every seed key set to s plus a fixed offset.
[[nodiscard]] std::vector<std::pair<std::string, std::string>> seed_overrides(std::uint64_t seed);

[[nodiscard]] plant::VanDerPolPlant make_plant(const ExperimentConfig& cfg);

struct ProductData {
    datagen::InitialConditions initial;
    datagen::Dataset dataset;
};

/// Initial states from a T_u,ini excitation rollout clustered by k-means, then every
/// (input window, initial state) pair simulated. Input sequences are Hankel windows.
[[nodiscard]] ProductData build_product_data(const ExperimentConfig& cfg, Index tu, Index tx,
                                             Index tu_ini);
[[nodiscard]] ProductData build_product_data(const ExperimentConfig& cfg);

/// One rollout of length T+N−1 from x_start under a fresh excitation.
[[nodiscard]] datagen::StackedData build_stacked_data(const ExperimentConfig& cfg, Index size);

/// Validation windows (state, input sequence, true outputs) from an independent rollout.
[[nodiscard]] datagen::StackedData build_validation_data(const ExperimentConfig& cfg);

[[nodiscard]] predictor::ProductPredictor fit_product(const ExperimentConfig& cfg,
                                                      datagen::Dataset dataset);
[[nodiscard]] predictor::StackedPredictor fit_stacked(const ExperimentConfig& cfg,
                                                      datagen::StackedData data);

struct PredictionErrors {
    Vector product;   ///< per rollout (1/N)·‖ŷ − y‖₂
    Vector reduced;
    Vector stacked;   ///< empty when no stacked predictor was given
    Vector product_reduced_gap;  ///< ‖ŷ_product − ŷ_reduced‖∞ per rollout
    double mean_product = 0.0;
    double mean_reduced = 0.0;
    double mean_stacked = 0.0;
};

[[nodiscard]] PredictionErrors evaluate_predictions(const predictor::ProductPredictor& product,
                                                    const predictor::StackedPredictor* stacked,
                                                    const datagen::StackedData& validation);

/// Mean (1/N)·‖ŷ − y‖₂ of the stacked predictor alone.
[[nodiscard]] double mean_stacked_prediction_error(const predictor::StackedPredictor& stacked,
                                                   const datagen::StackedData& validation,
                                                   Index horizon);

[[nodiscard]] controller::ControlConfig control_config(const ExperimentConfig& cfg, bool full);

/// Closed-loop run of `controller` for `steps` steps (cfg.steps when negative).
[[nodiscard]] controller::TrackingResult run_tracking(const ExperimentConfig& cfg,
                                                      const controller::Controller& ctrl,
                                                      Index steps = -1);

struct BenchRecord {
    std::string method;
    Index t = 0, tu = 0, tx = 0;
    double gram_construction_s = -1.0;  ///< negative means unavailable
    double gram_inversion_s = -1.0;
    double mean_control_action_s = -1.0;
    double mean_tracking_error = -1.0;
    double mean_prediction_error = -1.0;
};

/// Timing and accuracy measurements for the product, materialized and stacked paths
/// at the configured and large data sizes. Progress lines go to `log` when non-null.
[[nodiscard]] std::vector<BenchRecord> run_bench(const ExperimentConfig& cfg, std::ostream* log);

/// Fixed header, "NA" for unavailable fields, written via a temporary file and rename.
void write_report(const std::filesystem::path& file, const std::vector<BenchRecord>& records,
                  const std::string& config_hash);

/// Writes `content` to `file` through a sibling temporary and a rename.
void write_atomically(const std::filesystem::path& file, const std::string& content);

[[nodiscard]] double median(std::vector<double> values);
[[nodiscard]] double seconds_since(std::int64_t start_ns);
[[nodiscard]] std::int64_t now_ns();

/// Median wall time of `reps` runs after one warm-up.
template <class F>
double median_time(Index reps, F&& fn) {
    fn();
    std::vector<double> times;
    for (Index r = 0; r < std::max<Index>(reps, 1); ++r) {
        const auto t0 = now_ns();
        fn();
        times.push_back(seconds_since(t0));
    }
    return median(times);
}

}  // namespace kerodeepc::experiment
