#include "kerodeepc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>

namespace kerodeepc::experiment {

namespace {

using config::KeyValueFile;

Matrix weight_matrix(const KeyValueFile& f, const std::string& key, double fallback, Index dim) {
    const Vector v = f.get_vector(key, Vector::Constant(1, fallback));
    if (v.size() == 1) return v(0) * Matrix::Identity(dim, dim);
    if (v.size() == dim) return v.asDiagonal();
    throw ConfigError(f.where(key) + "'" + key + "' needs 1 or " + std::to_string(dim) +
                      " diagonal entries, got " + std::to_string(v.size()));
}

Vector sized_vector(const KeyValueFile& f, const std::string& key, const Vector& fallback,
                    Index dim) {
    Vector v = f.get_vector(key, fallback);
    if (v.size() == 1 && dim > 1) v = Vector::Constant(dim, v(0));
    if (v.size() != dim) {
        throw ConfigError(f.where(key) + "'" + key + "' needs " + std::to_string(dim) +
                          " entries, got " + std::to_string(v.size()));
    }
    return v;
}

std::pair<double, double> range(const KeyValueFile& f, const std::string& key, double lo,
                                double hi) {
    Vector v = f.get_vector(key, Vector());
    if (!f.has(key)) return {lo, hi};
    if (v.size() != 2 || !(v(0) < v(1))) {
        throw ConfigError(f.where(key) + "'" + key + "' expects 'low, high' with low < high");
    }
    return {v(0), v(1)};
}

kernels::KernelSpec factor_kernel(const KeyValueFile& f, const std::string& prefix,
                                  double sigma_default) {
    const std::string fam_key = "kernel." + prefix + "_family";
    const std::string sig_key = "kernel." + prefix + "_sigma";
    kernels::Family fam;
    try {
        fam = kernels::family_from_string(f.get_string(fam_key, "gaussian"));
    } catch (const Error& e) {
        throw ConfigError(f.where(fam_key) + e.what());
    }
    const Vector sig = f.get_vector(sig_key, Vector::Constant(1, sigma_default));
    kernels::KernelSpec spec;
    switch (fam) {
        case kernels::Family::Gaussian: spec = kernels::KernelSpec::gaussian(sig(0)); break;
        case kernels::Family::HardyReverseMultiquadric:
            spec = kernels::KernelSpec::hardy(sig(0),
                                              f.get_real("kernel." + prefix + "_exponent", 0.5));
            break;
        case kernels::Family::Linear: spec = kernels::KernelSpec::linear(); break;
        case kernels::Family::WeightedGaussian: spec = kernels::KernelSpec::weighted_gaussian(sig); break;
    }
    if (fam != kernels::Family::WeightedGaussian && sig.size() != 1) {
        throw ConfigError(f.where(sig_key) + "'" + sig_key + "' takes one value for this family");
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        throw ConfigError(f.where(sig_key) + e.what());
    }
    return spec;
}

std::string fmt(double v) {
    if (v < 0.0 || !std::isfinite(v)) return "NA";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

double mean_of(const Vector& v) { return v.size() ? v.mean() : 0.0; }

}  // namespace

std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double seconds_since(std::int64_t start_ns) { return 1e-9 * static_cast<double>(now_ns() - start_ns); }

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "plant.mu", "plant.ts",
        "data.x_start", "data.state_box_lower", "data.state_box_upper", "data.tu_ini", "data.tx",
        "data.tu", "data.horizon", "data.band", "data.amplitude", "data.num_sinusoids",
        "data.num_trials", "data.seed_ini", "data.seed_u", "data.seed_stacked",
        "data.seed_validation", "data.kmeans_init", "data.kmeans_max_iter", "data.kmeans_seed",
        "kernel.u_family", "kernel.u_sigma", "kernel.u_exponent", "kernel.x_family",
        "kernel.x_sigma", "kernel.x_exponent", "kernel.stacked_sigma_state",
        "kernel.stacked_sigma_input", "kernel.jitter_u", "kernel.jitter_x", "kernel.jitter_stacked",
        "control.q", "control.r", "control.p", "control.lambda", "control.u_lower",
        "control.u_upper", "control.y_lower", "control.y_upper", "control.ref_steps",
        "control.ref_values", "control.ref_u", "control.steps", "control.x_init",
        "solver.tol_eq", "solver.tol_kkt", "solver.max_outer", "solver.max_inner",
        "solver.full_max_outer", "solver.full_max_inner", "solver.strict",
        "validation.rollouts",
        "bench.repetitions", "bench.large_tu", "bench.large_tx", "bench.large_tu_ini",
        "bench.control_steps",
        "output.dir"};
    return keys;
}

std::vector<std::pair<std::string, std::string>> seed_overrides(std::uint64_t seed) {
    return {{"data.seed_ini", std::to_string(seed)},
            {"data.seed_u", std::to_string(seed + 1)},
            {"data.seed_stacked", std::to_string(seed + 2)},
            {"data.seed_validation", std::to_string(seed + 3)},
            {"data.kmeans_seed", std::to_string(seed + 4)}};
}

ExperimentConfig ExperimentConfig::defaults() { return from_file(KeyValueFile::parse("", "<defaults>")); }

ExperimentConfig ExperimentConfig::load(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    KeyValueFile f = KeyValueFile::load(path);
    for (const auto& [k, v] : overrides) f.set(k, v);
    return from_file(f);
}

ExperimentConfig ExperimentConfig::from_file(const KeyValueFile& f) {
    f.reject_unknown(known_keys());
    ExperimentConfig c;
    const Index n = 2, m = 1, p = 1;

    c.mu = f.get_real("plant.mu", 1.0);
    c.ts = f.get_real("plant.ts", 0.1);
    if (!(c.ts > 0.0)) throw ConfigError(f.where("plant.ts") + "plant.ts must be positive");

    c.x_start = sized_vector(f, "data.x_start", Vector::Zero(n), n);
    c.state_box.lower = sized_vector(f, "data.state_box_lower", Vector::Constant(n, -4.0), n);
    c.state_box.upper = sized_vector(f, "data.state_box_upper", Vector::Constant(n, 4.0), n);
    if ((c.state_box.lower.array() >= c.state_box.upper.array()).any()) {
        throw ConfigError(f.where("data.state_box_upper") + "state box is empty");
    }
    c.tu_ini = f.get_count("data.tu_ini", 100);
    c.tx = f.get_count("data.tx", 20);
    c.tu = f.get_count("data.tu", 20);
    c.horizon = f.get_count("data.horizon", 10);
    if (c.tx < 1) throw ConfigError(f.where("data.tx") + "data.tx must be at least 1");
    if (c.tu < 1) throw ConfigError(f.where("data.tu") + "data.tu must be at least 1");
    if (c.horizon < 1) throw ConfigError(f.where("data.horizon") + "data.horizon must be at least 1");
    if (c.tu_ini < c.tx) {
        throw ConfigError(f.where("data.tu_ini") + "data.tu_ini must be at least data.tx");
    }
    std::tie(c.excitation.band_low, c.excitation.band_high) = range(f, "data.band", 0.0, 1.0);
    std::tie(c.excitation.amplitude_low, c.excitation.amplitude_high) =
        range(f, "data.amplitude", -1.0, 1.0);
    c.excitation.num_sinusoids = f.get_count("data.num_sinusoids", 25);
    c.excitation.num_trials = f.get_count("data.num_trials", 40);
    try {
        c.excitation.validate();
    } catch (const Error& e) {
        throw ConfigError(f.where("data.band") + e.what());
    }
    c.seed_ini = static_cast<std::uint64_t>(f.get_count("data.seed_ini", 1));
    c.seed_u = static_cast<std::uint64_t>(f.get_count("data.seed_u", 2));
    c.seed_stacked = static_cast<std::uint64_t>(f.get_count("data.seed_stacked", 3));
    c.seed_validation = static_cast<std::uint64_t>(f.get_count("data.seed_validation", 4));
    c.kmeans_seed = static_cast<std::uint64_t>(f.get_count("data.kmeans_seed", 5));
    const std::string init = f.get_string("data.kmeans_init", "halton");
    if (init == "halton") {
        c.kmeans_init = datagen::CentroidInit::Halton;
    } else if (init == "uniform") {
        c.kmeans_init = datagen::CentroidInit::Uniform;
    } else {
        throw ConfigError(f.where("data.kmeans_init") + "data.kmeans_init must be halton or uniform");
    }
    c.kmeans_max_iter = f.get_count("data.kmeans_max_iter", 300);

    c.ku = factor_kernel(f, "u", 50.0);
    c.kx = factor_kernel(f, "x", 3.0);
    c.stacked_sigma_state = f.get_real("kernel.stacked_sigma_state", 3.0);
    c.stacked_sigma_input = f.get_real("kernel.stacked_sigma_input", 50.0);
    if (!(c.stacked_sigma_state > 0.0) || !(c.stacked_sigma_input > 0.0)) {
        throw ConfigError(f.where("kernel.stacked_sigma_state") + "stacked kernel widths must be positive");
    }
    c.jitter_u = f.get_real("kernel.jitter_u", -1.0);
    c.jitter_x = f.get_real("kernel.jitter_x", -1.0);
    c.jitter_stacked = f.get_real("kernel.jitter_stacked", -1.0);

    c.control = controller::ControlConfig::defaults(m, p, c.horizon);
    c.control.q = weight_matrix(f, "control.q", 1.0, p);
    c.control.r = weight_matrix(f, "control.r", 0.01, m);
    c.control.p = weight_matrix(f, "control.p", 1.0, p);
    c.control.lambda = f.get_real("control.lambda", 1.0);
    c.control.u_lower = sized_vector(f, "control.u_lower", Vector::Constant(m, -1.0), m);
    c.control.u_upper = sized_vector(f, "control.u_upper", Vector::Constant(m, 1.0), m);
    const double inf = std::numeric_limits<double>::infinity();
    c.control.y_lower = sized_vector(f, "control.y_lower", Vector::Constant(p, -inf), p);
    c.control.y_upper = sized_vector(f, "control.y_upper", Vector::Constant(p, inf), p);
    c.control.ref_u = sized_vector(f, "control.ref_u", Vector::Zero(m), m);
    c.control.solver.tol_eq = f.get_real("solver.tol_eq", 1e-6);
    c.control.solver.tol_kkt = f.get_real("solver.tol_kkt", 1e-6);
    c.control.solver.max_outer = f.get_count("solver.max_outer", 200);
    c.control.solver.max_inner = f.get_count("solver.max_inner", 500);
    c.full_max_outer = f.get_count("solver.full_max_outer", 50);
    c.full_max_inner = f.get_count("solver.full_max_inner", 200);
    c.strict = f.get_bool("solver.strict", false);
    try {
        c.control.validate(m, p);
    } catch (const Error& e) {
        throw ConfigError(f.source() + ": control section: " + e.what());
    }

    const auto ref_steps = f.get_counts("control.ref_steps", {0, 50, 100, 150});
    const Vector ref_values =
        f.get_vector("control.ref_values", (Vector(4) << 0.5, -0.5, 0.5, 0.0).finished());
    if (static_cast<Index>(ref_steps.size()) * p != ref_values.size() || ref_steps.empty()) {
        throw ConfigError(f.where("control.ref_values") +
                          "control.ref_values needs p values per entry of control.ref_steps");
    }
    for (size_t i = 0; i < ref_steps.size(); ++i) {
        if (i > 0 && ref_steps[i] <= ref_steps[i - 1]) {
            throw ConfigError(f.where("control.ref_steps") + "control.ref_steps must increase");
        }
        c.reference.steps.push_back(ref_steps[i]);
        c.reference.values.push_back(ref_values.segment(static_cast<Index>(i) * p, p));
    }
    c.steps = f.get_count("control.steps", 200);
    if (c.steps < 1) throw ConfigError(f.where("control.steps") + "control.steps must be at least 1");
    c.x_init = sized_vector(f, "control.x_init", c.x_start, n);

    c.validation_rollouts = f.get_count("validation.rollouts", 100);
    if (c.validation_rollouts < 1) {
        throw ConfigError(f.where("validation.rollouts") + "validation.rollouts must be at least 1");
    }
    c.bench_repetitions = f.get_count("bench.repetitions", 5);
    c.bench_large_tu = f.get_count("bench.large_tu", 50);
    c.bench_large_tx = f.get_count("bench.large_tx", 200);
    c.bench_large_tu_ini = f.get_count("bench.large_tu_ini", 1000);
    c.bench_control_steps = f.get_count("bench.control_steps", 5);
    if (c.bench_large_tu_ini < c.bench_large_tx) {
        throw ConfigError(f.where("bench.large_tu_ini") + "bench.large_tu_ini must be at least bench.large_tx");
    }
    c.output_dir = f.get_string("output.dir", "out");
    c.hash = f.hash();
    return c;
}

kernels::KernelSpec ExperimentConfig::stacked_kernel() const {
    const Index n = x_start.size();
    Vector sig(n + horizon);
    sig.head(n).setConstant(stacked_sigma_state);
    sig.tail(horizon).setConstant(stacked_sigma_input);
    return kernels::KernelSpec::weighted_gaussian(sig);
}

plant::VanDerPolPlant make_plant(const ExperimentConfig& cfg) {
    return plant::VanDerPolPlant(cfg.mu, cfg.ts);
}

ProductData build_product_data(const ExperimentConfig& cfg, Index tu, Index tx, Index tu_ini) {
    const auto plant = make_plant(cfg);
    datagen::ExcitationConfig exc = cfg.excitation;
    exc.length = tu_ini;
    exc.seed = cfg.seed_ini;
    datagen::KMeansConfig km;
    km.k = tx;
    km.max_iter = cfg.kmeans_max_iter;
    km.init = cfg.kmeans_init;
    km.seed = cfg.kmeans_seed;
    km.box = cfg.state_box;

    ProductData out;
    out.initial = datagen::generate_initial_conditions(plant, cfg.x_start, exc, km);

    datagen::ExcitationConfig exc_u = cfg.excitation;
    exc_u.length = tu + cfg.horizon - 1;
    exc_u.seed = cfg.seed_u;
    const Matrix signal = datagen::multisine(exc_u, plant.input_dim());
    const Matrix inputs = datagen::hankel_windows(signal, cfg.horizon, tu);
    out.dataset = datagen::generate_dataset(plant, out.initial.x0, inputs, cfg.horizon);
    out.dataset.provenance = cfg.hash;
    return out;
}

ProductData build_product_data(const ExperimentConfig& cfg) {
    return build_product_data(cfg, cfg.tu, cfg.tx, cfg.tu_ini);
}

datagen::StackedData build_stacked_data(const ExperimentConfig& cfg, Index size) {
    const auto plant = make_plant(cfg);
    datagen::ExcitationConfig exc = cfg.excitation;
    exc.length = size + cfg.horizon - 1;
    exc.seed = cfg.seed_stacked;
    return datagen::generate_stacked_data(plant, cfg.x_start, datagen::multisine(exc, 1),
                                          cfg.horizon);
}

datagen::StackedData build_validation_data(const ExperimentConfig& cfg) {
    const auto plant = make_plant(cfg);
    const Index stride = cfg.horizon;
    datagen::ExcitationConfig exc = cfg.excitation;
    exc.length = stride * cfg.validation_rollouts + cfg.horizon - 1;
    exc.seed = cfg.seed_validation;
    const auto all = datagen::generate_stacked_data(plant, cfg.x_start, datagen::multisine(exc, 1),
                                                    cfg.horizon);
    datagen::StackedData out;
    out.state_dim = all.state_dim;
    out.z.resize(all.z.rows(), cfg.validation_rollouts);
    out.y.resize(all.y.rows(), cfg.validation_rollouts);
    for (Index r = 0; r < cfg.validation_rollouts; ++r) {
        out.z.col(r) = all.z.col(r * stride);
        out.y.col(r) = all.y.col(r * stride);
    }
    return out;
}

predictor::ProductPredictor fit_product(const ExperimentConfig& cfg, datagen::Dataset dataset) {
    return predictor::ProductPredictor::fit(std::move(dataset), cfg.ku, cfg.kx, cfg.jitter_u,
                                            cfg.jitter_x);
}

predictor::StackedPredictor fit_stacked(const ExperimentConfig& cfg, datagen::StackedData data) {
    return predictor::StackedPredictor::fit(std::move(data), cfg.stacked_kernel(),
                                            cfg.jitter_stacked);
}

PredictionErrors evaluate_predictions(const predictor::ProductPredictor& product,
                                      const predictor::StackedPredictor* stacked,
                                      const datagen::StackedData& validation) {
    const Index r = validation.z.cols();
    const Index n = validation.state_dim;
    const Index horizon = product.dataset().horizon;
    PredictionErrors e;
    e.product.resize(r);
    e.reduced.resize(r);
    e.product_reduced_gap.resize(r);
    if (stacked) e.stacked.resize(r);
    for (Index i = 0; i < r; ++i) {
        const Vector x = validation.z.col(i).head(n);
        const Vector u = validation.z.col(i).tail(validation.z.rows() - n);
        const Vector y = validation.y.col(i);
        const Vector yp = product.predict_product(u, x);
        const Vector yr = product.predict_reduced(u, x);
        e.product(i) = (yp - y).norm() / static_cast<double>(horizon);
        e.reduced(i) = (yr - y).norm() / static_cast<double>(horizon);
        e.product_reduced_gap(i) = (yp - yr).lpNorm<Eigen::Infinity>();
        if (stacked) e.stacked(i) = (stacked->predict(u, x) - y).norm() / static_cast<double>(horizon);
    }
    e.mean_product = mean_of(e.product);
    e.mean_reduced = mean_of(e.reduced);
    e.mean_stacked = mean_of(e.stacked);
    return e;
}

double mean_stacked_prediction_error(const predictor::StackedPredictor& stacked,
                                     const datagen::StackedData& validation, Index horizon) {
    const Index n = validation.state_dim;
    double sum = 0.0;
    for (Index i = 0; i < validation.z.cols(); ++i) {
        const Vector x = validation.z.col(i).head(n);
        const Vector u = validation.z.col(i).tail(validation.z.rows() - n);
        sum += (stacked.predict(u, x) - validation.y.col(i)).norm() / static_cast<double>(horizon);
    }
    return validation.z.cols() ? sum / static_cast<double>(validation.z.cols()) : 0.0;
}

controller::ControlConfig control_config(const ExperimentConfig& cfg, bool full) {
    controller::ControlConfig c = cfg.control;
    c.horizon = cfg.horizon;
    if (full) {
        c.solver.max_outer = cfg.full_max_outer;
        c.solver.max_inner = cfg.full_max_inner;
    }
    return c;
}

controller::TrackingResult run_tracking(const ExperimentConfig& cfg,
                                        const controller::Controller& ctrl, Index steps) {
    const auto plant = make_plant(cfg);
    return controller::run_receding_horizon(plant, ctrl, cfg.reference,
                                            steps < 0 ? cfg.steps : steps, cfg.x_init);
}

namespace {

struct GramTimes {
    double construction = 0.0;
    double inversion = 0.0;
};

/// Builds K, adds jitter and factors it in place; `reps` timed runs after a warm-up,
/// or a single untimed-warm-up run when reps is 0. The last factor (lower triangle)
/// is handed to `keep` when given.
template <class Build>
GramTimes time_gram(Index reps, Build&& build, double jitter, Matrix* keep = nullptr) {
    std::vector<double> tb, ti;
    const Index last = reps <= 0 ? 0 : reps;
    for (Index r = 0; r <= last; ++r) {
        auto t0 = now_ns();
        Matrix k = build();
        const double b = seconds_since(t0);
        t0 = now_ns();
        k.diagonal().array() += jitter < 0.0 ? predictor::default_jitter(k) : jitter;
        Eigen::LLT<Eigen::Ref<Matrix>> llt(k);
        const double i = seconds_since(t0);
        if (llt.info() != Eigen::Success) throw FactorizationError("bench: Gram matrix is not positive definite", 0.0);
        if (r > 0 || last == 0) {
            tb.push_back(b);
            ti.push_back(i);
        }
        if (keep && r == last) *keep = std::move(k);
    }
    return {median(tb), median(ti)};
}

}  // namespace

std::vector<BenchRecord> run_bench(const ExperimentConfig& cfg, std::ostream* log) {
    Eigen::setNbThreads(1);
    auto say = [log](const std::string& s) {
        if (log) *log << s << std::endl;
    };
    std::vector<BenchRecord> records;
    const auto plant = make_plant(cfg);
    const auto validation = build_validation_data(cfg);
    const Index reps = cfg.bench_repetitions;

    struct Scale {
        Index tu, tx, tu_ini;
        bool small;
    };
    const Scale scales[] = {{cfg.tu, cfg.tx, cfg.tu_ini, true},
                            {cfg.bench_large_tu, cfg.bench_large_tx, cfg.bench_large_tu_ini, false}};

    for (const auto& sc : scales) {
        const Index t = sc.tu * sc.tx;
        say("bench: T = " + std::to_string(t) + " (Tu = " + std::to_string(sc.tu) +
            ", Tx = " + std::to_string(sc.tx) + ")");
        auto pd = build_product_data(cfg, sc.tu, sc.tx, sc.tu_ini);
        const Matrix u_pts = pd.dataset.u;
        const Matrix x_pts = pd.dataset.x0;

        // Product path: two small Gram matrices.
        const auto tu_times = time_gram(reps, [&] { return kernels::gram(cfg.ku, u_pts).matrix; }, cfg.jitter_u);
        const auto tx_times = time_gram(reps, [&] { return kernels::gram(cfg.kx, x_pts).matrix; }, cfg.jitter_x);
        const auto pred = fit_product(cfg, pd.dataset);
        const auto perr = evaluate_predictions(pred, nullptr, validation);

        BenchRecord prod{"efficient-product", t, sc.tu, sc.tx};
        prod.gram_construction_s = tu_times.construction + tx_times.construction;
        prod.gram_inversion_s = tu_times.inversion + tx_times.inversion;
        prod.mean_prediction_error = perr.mean_product;
        {
            controller::EfficientController ctrl(pred, control_config(cfg, false));
            const auto tr = run_tracking(cfg, ctrl);
            prod.mean_control_action_s = tr.mean_solve_time;
            prod.mean_tracking_error = tr.mean_tracking_error;
        }
        say("  product gram " + fmt(prod.gram_construction_s) + " s, factor " +
            fmt(prod.gram_inversion_s) + " s, control " + fmt(prod.mean_control_action_s) +
            " s/step, tracking " + fmt(prod.mean_tracking_error) + ", prediction " +
            fmt(prod.mean_prediction_error));
        records.push_back(prod);

        // Hypothetical materialized Kronecker Gram, timed once.
        {
            BenchRecord mat{"product-materialized", t, sc.tu, sc.tx};
            const Matrix ku = pred.ku_matrix();
            const Matrix kx = pred.kx_matrix();
            const auto mt = time_gram(sc.small ? reps : 0, [&] { return numerics::kron(ku, kx); }, 0.0);
            mat.gram_construction_s = mt.construction;
            mat.gram_inversion_s = mt.inversion;
            mat.mean_prediction_error = perr.mean_product;
            if (sc.small) {
                controller::FullProductController ctrl(pred, control_config(cfg, true));
                const Index steps = std::min(cfg.bench_control_steps, cfg.steps);
                const auto tr = run_tracking(cfg, ctrl, steps);
                mat.mean_control_action_s = tr.mean_solve_time;
                if (steps == cfg.steps) mat.mean_tracking_error = tr.mean_tracking_error;
                mat.method = "full-product";
            }
            say("  " + mat.method + " gram " + fmt(mat.gram_construction_s) + " s, factor " +
                fmt(mat.gram_inversion_s) + " s, control " + fmt(mat.mean_control_action_s) + " s/step");
            records.push_back(mat);
        }

        // Stacked baseline on the same data budget.
        {
            BenchRecord st{"full-stacked", t, sc.tu, sc.tx};
            auto sd = build_stacked_data(cfg, t);
            const auto spec = cfg.stacked_kernel();
            Matrix factor;
            const auto times = time_gram(reps, [&] { return kernels::gram(spec, sd.z).matrix; },
                                         cfg.jitter_stacked, &factor);
            st.gram_construction_s = times.construction;
            st.gram_inversion_s = times.inversion;
            if (sc.small) {
                factor.resize(0, 0);
                const auto spred = fit_stacked(cfg, std::move(sd));
                st.mean_prediction_error = mean_stacked_prediction_error(spred, validation, cfg.horizon);
                controller::FullStackedController ctrl(spred, control_config(cfg, true));
                const Index steps = std::min(cfg.bench_control_steps, cfg.steps);
                const auto tr = run_tracking(cfg, ctrl, steps);
                st.mean_control_action_s = tr.mean_solve_time;
                if (steps == cfg.steps) st.mean_tracking_error = tr.mean_tracking_error;
            } else {
                // Prediction only, through the last in-place factor; control is out of reach.
                double sum = 0.0;
                for (Index i = 0; i < validation.z.cols(); ++i) {
                    const Vector kz = kernels::kernel_vector(spec, validation.z.col(i), sd.z);
                    Vector a = factor.triangularView<Eigen::Lower>().solve(kz);
                    factor.triangularView<Eigen::Lower>().transpose().solveInPlace(a);
                    sum += (sd.y * a - validation.y.col(i)).norm() / static_cast<double>(cfg.horizon);
                }
                st.mean_prediction_error = sum / static_cast<double>(validation.z.cols());
            }
            say("  stacked gram " + fmt(st.gram_construction_s) + " s, factor " +
                fmt(st.gram_inversion_s) + " s, control " + fmt(st.mean_control_action_s) +
                " s/step, prediction " + fmt(st.mean_prediction_error));
            records.push_back(st);
        }
    }
    return records;
}

void write_atomically(const std::filesystem::path& file, const std::string& content) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw Error("cannot write " + tmp.string());
        os << content;
        if (!os.flush()) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

void write_report(const std::filesystem::path& file, const std::vector<BenchRecord>& records,
                  const std::string& config_hash) {
    std::ostringstream os;
    os << "method,T,Tu,Tx,gram_construction_s,gram_inversion_s,mean_control_action_s,"
          "mean_tracking_error,mean_prediction_error,config_hash\n";
    for (const auto& r : records) {
        os << r.method << ',' << r.t << ',' << r.tu << ',' << r.tx << ','
           << fmt(r.gram_construction_s) << ',' << fmt(r.gram_inversion_s) << ','
           << fmt(r.mean_control_action_s) << ',' << fmt(r.mean_tracking_error) << ','
           << fmt(r.mean_prediction_error) << ',' << config_hash << '\n';
    }
    write_atomically(file, os.str());
}

}  // namespace kerodeepc::experiment
