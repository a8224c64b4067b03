#include "kerodeepc/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace kerodeepc::datagen {

void Dataset::validate() const {
    if (x0.rows() != n || u.rows() != m * horizon || y.rows() != p * horizon ||
        y.cols() != tu() * tx()) {
        throw DimensionError("dataset: matrix shapes disagree with (n, m, p, N, Tu, Tx)");
    }
}

void ExcitationConfig::validate() const {
    if (length < 1) throw InvalidArgument("excitation length must be >= 1");
    if (!(0.0 <= band_low && band_low <= band_high && band_high <= 1.0)) {
        throw InvalidArgument("excitation band must satisfy 0 <= low <= high <= 1");
    }
    if (!(amplitude_low < amplitude_high)) {
        throw InvalidArgument("excitation amplitude range must satisfy lo < hi");
    }
    if (num_sinusoids < 1) throw InvalidArgument("excitation needs at least one sinusoid");
    if (num_trials < 1) throw InvalidArgument("excitation needs at least one trial");
}

Matrix multisine(const ExcitationConfig& cfg, Index m) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> freq(cfg.band_low, cfg.band_high);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    Matrix out(m, cfg.length);
    for (Index ch = 0; ch < m; ++ch) {
        Vector omega(cfg.num_sinusoids);
        for (Index s = 0; s < cfg.num_sinusoids; ++s) {
            omega(s) = std::numbers::pi * freq(rng);
        }
        Vector best;
        double best_crest = std::numeric_limits<double>::infinity();
        for (Index trial = 0; trial < cfg.num_trials; ++trial) {
            Vector sig = Vector::Zero(cfg.length);
            for (Index s = 0; s < cfg.num_sinusoids; ++s) {
                const double ph = phase(rng);
                for (Index t = 0; t < cfg.length; ++t) {
                    sig(t) += std::sin(omega(s) * static_cast<double>(t) + ph);
                }
            }
            const double rms = std::sqrt(sig.squaredNorm() / static_cast<double>(cfg.length));
            const double crest = rms > 0.0 ? sig.cwiseAbs().maxCoeff() / rms
                                           : std::numeric_limits<double>::max();
            if (crest < best_crest || best.size() == 0) {
                best_crest = crest;
                best = std::move(sig);
            }
        }
        const double lo = best.minCoeff();
        const double hi = best.maxCoeff();
        if (hi - lo > 0.0) {
            out.row(ch) = (cfg.amplitude_low +
                           (best.array() - lo) / (hi - lo) * (cfg.amplitude_high - cfg.amplitude_low))
                              .matrix()
                              .transpose();
        } else {
            out.row(ch).setConstant(0.5 * (cfg.amplitude_low + cfg.amplitude_high));
        }
    }
    return out;
}

Matrix hankel_windows(const Matrix& signal, Index horizon, Index count) {
    if (horizon < 1 || count < 1) throw InvalidArgument("hankel_windows: empty request");
    if (signal.cols() < horizon + count - 1) {
        throw DimensionError("hankel_windows: signal too short for the requested windows");
    }
    const Index m = signal.rows();
    Matrix out(m * horizon, count);
    for (Index j = 0; j < count; ++j) {
        Matrix window = signal.middleCols(j, horizon);
        out.col(j) = Eigen::Map<const Vector>(window.data(), window.size());
    }
    return out;
}

bool Box::contains(const Eigen::Ref<const Vector>& x, double slack) const {
    return ((x.array() >= lower.array() - slack) && (x.array() <= upper.array() + slack)).all();
}

void Box::validate(Index dim) const {
    if (lower.size() != dim || upper.size() != dim) {
        throw DimensionError("box dimension does not match the state dimension");
    }
    if ((lower.array() > upper.array()).any()) {
        throw InvalidArgument("box is empty (lower > upper)");
    }
}

namespace {

double radical_inverse(Index index, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

std::vector<int> first_primes(Index count) {
    std::vector<int> primes;
    for (int c = 2; static_cast<Index>(primes.size()) < count; ++c) {
        bool prime = true;
        for (int p : primes) {
            if (p * p > c) break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(c);
    }
    return primes;
}

}  // namespace

Matrix halton(Index dim, Index count, const Box& box) {
    if (dim < 1) throw InvalidArgument("halton: dimension must be >= 1");
    box.validate(dim);
    const auto primes = first_primes(dim);
    Matrix out(dim, count);
    for (Index i = 0; i < count; ++i) {
        for (Index d = 0; d < dim; ++d) {
            const double r = radical_inverse(i + 1, primes[static_cast<size_t>(d)]);
            out(d, i) = box.lower(d) + r * (box.upper(d) - box.lower(d));
        }
    }
    return out;
}

KMeansResult kmeans(const Matrix& points, const KMeansConfig& cfg) {
    const Index n = points.rows();
    const Index count = points.cols();
    if (cfg.k < 1) throw InvalidArgument("kmeans: k must be >= 1");
    if (count < cfg.k) throw InvalidArgument("kmeans: fewer points than clusters");
    cfg.box.validate(n);

    KMeansResult res;
    if (cfg.init == CentroidInit::Halton) {
        res.centroids = halton(n, cfg.k, cfg.box);
    } else {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        res.centroids.resize(n, cfg.k);
        for (Index c = 0; c < cfg.k; ++c) {
            for (Index d = 0; d < n; ++d) {
                res.centroids(d, c) =
                    cfg.box.lower(d) + unit(rng) * (cfg.box.upper(d) - cfg.box.lower(d));
            }
        }
    }

    std::vector<Index> assign(static_cast<size_t>(count), -1);
    Vector dist(count);
    for (Index iter = 0; iter < std::max<Index>(cfg.max_iter, 1); ++iter) {
        // Assignment step.
        bool changed = false;
        for (Index j = 0; j < count; ++j) {
            Index best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Index c = 0; c < cfg.k; ++c) {
                const double d = (points.col(j) - res.centroids.col(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[static_cast<size_t>(j)] != best) changed = true;
            assign[static_cast<size_t>(j)] = best;
            dist(j) = best_d;
        }

        // Reseed empty clusters at the point farthest from its centroid. The
        // stolen point sits at distance zero from its new centroid, so the
        // objective can only drop.
        std::vector<Index> sizes(static_cast<size_t>(cfg.k), 0);
        for (Index a : assign) ++sizes[static_cast<size_t>(a)];
        for (Index c = 0; c < cfg.k; ++c) {
            if (sizes[static_cast<size_t>(c)] > 0) continue;
            Index far = -1;
            double far_d = 0.0;
            for (Index j = 0; j < count; ++j) {
                if (sizes[static_cast<size_t>(assign[static_cast<size_t>(j)])] > 1 &&
                    dist(j) > far_d) {
                    far_d = dist(j);
                    far = j;
                }
            }
            if (far < 0) break;  // all points coincide with their centroids
            --sizes[static_cast<size_t>(assign[static_cast<size_t>(far)])];
            assign[static_cast<size_t>(far)] = c;
            ++sizes[static_cast<size_t>(c)];
            res.centroids.col(c) = points.col(far);
            dist(far) = 0.0;
            changed = true;
        }
        res.objective.push_back(dist.sum());

        // Update step.
        Matrix sums = Matrix::Zero(n, cfg.k);
        for (Index j = 0; j < count; ++j) sums.col(assign[static_cast<size_t>(j)]) += points.col(j);
        double max_shift = 0.0;
        for (Index c = 0; c < cfg.k; ++c) {
            if (sizes[static_cast<size_t>(c)] == 0) continue;
            const Vector mean = sums.col(c) / static_cast<double>(sizes[static_cast<size_t>(c)]);
            max_shift = std::max(max_shift, (mean - res.centroids.col(c)).norm());
            res.centroids.col(c) = mean;
        }
        res.iterations = iter + 1;
        if (!changed || max_shift < cfg.tol) {
            res.converged = true;
            break;
        }
    }

    // Objective of the final centroids.
    double final_obj = 0.0;
    for (Index j = 0; j < count; ++j) {
        final_obj += (points.col(j) - res.centroids.col(assign[static_cast<size_t>(j)])).squaredNorm();
    }
    res.objective.push_back(final_obj);
    res.assignment = std::move(assign);
    return res;
}

InitialConditions generate_initial_conditions(const plant::Plant& plant,
                                              const Eigen::Ref<const Vector>& x_start,
                                              const ExcitationConfig& exc,
                                              const KMeansConfig& km) {
    InitialConditions out;
    out.excitation = multisine(exc, plant.input_dim());
    out.visited = plant::simulate(plant, x_start, out.excitation).states;
    out.clustering = kmeans(out.visited, km);
    out.x0 = out.clustering.centroids;
    return out;
}

Dataset generate_dataset(const plant::Plant& plant, const Matrix& x0, const Matrix& inputs,
                         Index horizon) {
    const Index m = plant.input_dim();
    const Index p = plant.output_dim();
    if (x0.cols() < 1 || inputs.cols() < 1) {
        throw InvalidArgument("generate_dataset: need at least one state and one input sequence");
    }
    if (x0.rows() != plant.state_dim()) {
        throw DimensionError("generate_dataset: initial states have the wrong dimension");
    }
    if (inputs.rows() != m * horizon) {
        throw DimensionError("generate_dataset: input sequences must have length m*N");
    }
    Dataset d;
    d.n = plant.state_dim();
    d.m = m;
    d.p = p;
    d.horizon = horizon;
    d.x0 = x0;
    d.u = inputs;
    d.y.resize(p * horizon, inputs.cols() * x0.cols());
    for (Index j = 0; j < inputs.cols(); ++j) {
        for (Index i = 0; i < x0.cols(); ++i) {
            try {
                d.y.col(d.column_index(j, i)) =
                    plant::simulate_stacked(plant, x0.col(i), inputs.col(j)).stacked_outputs();
            } catch (const DivergenceError& e) {
                throw DivergenceError("initial state " + std::to_string(i) + ", input sequence " +
                                      std::to_string(j) + ": " + e.what());
            }
        }
    }
    return d;
}

StackedData generate_stacked_data(const plant::Plant& plant, const Eigen::Ref<const Vector>& x_start,
                                  const Matrix& signal, Index horizon) {
    const Index n = plant.state_dim();
    const Index m = plant.input_dim();
    const Index p = plant.output_dim();
    const Index t = signal.cols() - horizon + 1;
    if (t < 1) throw DimensionError("generate_stacked_data: signal shorter than the horizon");
    const auto traj = plant::simulate(plant, x_start, signal);
    Matrix states(n, signal.cols() + 1);
    states.col(0) = x_start;
    states.rightCols(signal.cols()) = traj.states;

    StackedData out{Matrix(n + m * horizon, t), Matrix(p * horizon, t), n};
    const Matrix windows = hankel_windows(signal, horizon, t);
    for (Index i = 0; i < t; ++i) {
        out.z.col(i).head(n) = states.col(i);
        out.z.col(i).tail(m * horizon) = windows.col(i);
        Matrix ys = traj.outputs.middleCols(i, horizon);
        out.y.col(i) = Eigen::Map<const Vector>(ys.data(), ys.size());
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV persistence

namespace {

std::string format_real(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_real(const std::string& tok, const std::filesystem::path& file, Index line) {
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = tok.data() + tok.size();
    while (begin < end && *begin == ' ') ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\r')) --end;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(file.string() + ":" + std::to_string(line) + ": cannot parse '" + tok +
                          "' as a real number");
    }
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(tok);
    return out;
}

}  // namespace

void write_columns_csv(const std::filesystem::path& file, const Matrix& m) {
    std::ofstream os(file);
    if (!os) throw ConfigError("cannot open " + file.string() + " for writing");
    for (Index c = 0; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) {
            if (r > 0) os << ',';
            os << format_real(m(r, c));
        }
        os << '\n';
    }
    if (!os) throw ConfigError("write to " + file.string() + " failed");
}

Matrix read_columns_csv(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw ConfigError("cannot open " + file.string());
    std::vector<std::vector<double>> records;
    std::string line;
    Index lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<double> rec;
        for (const auto& tok : split(line, ',')) rec.push_back(parse_real(tok, file, lineno));
        if (!records.empty() && rec.size() != records.front().size()) {
            throw DimensionError(file.string() + ":" + std::to_string(lineno) + ": record has " +
                                 std::to_string(rec.size()) + " values, expected " +
                                 std::to_string(records.front().size()));
        }
        records.push_back(std::move(rec));
    }
    const Index rows = records.empty() ? 0 : static_cast<Index>(records.front().size());
    Matrix m(rows, static_cast<Index>(records.size()));
    for (size_t c = 0; c < records.size(); ++c) {
        for (Index r = 0; r < rows; ++r) m(r, static_cast<Index>(c)) = records[c][static_cast<size_t>(r)];
    }
    return m;
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
    if (d.tu() == 0 || d.tx() == 0) {
        throw InvalidArgument("save_dataset: refusing to save an empty dataset");
    }
    d.validate();
    if (!d.x0.allFinite() || !d.u.allFinite() || !d.y.allFinite()) {
        throw InvalidArgument("save_dataset: dataset contains non-finite values");
    }
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "meta.csv");
        if (!os) throw ConfigError("cannot write " + (dir / "meta.csv").string());
        os << "n,m,p,N,Tu,Tx,ordering,provenance\n";
        os << d.n << ',' << d.m << ',' << d.p << ',' << d.horizon << ',' << d.tu() << ','
           << d.tx() << ',' << kOrderingTag << ',' << d.provenance << '\n';
    }
    write_columns_csv(dir / "x0.csv", d.x0);
    write_columns_csv(dir / "u.csv", d.u);
    write_columns_csv(dir / "y.csv", d.y);
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto meta_path = dir / "meta.csv";
    std::ifstream is(meta_path);
    if (!is) throw ConfigError("cannot open " + meta_path.string());
    std::string header, values;
    std::getline(is, header);
    std::getline(is, values);
    const auto keys = split(header, ',');
    const auto vals = split(values, ',');
    if (keys.size() < 7 || vals.size() < 7 || keys[0] != "n") {
        throw ConfigError(meta_path.string() + ": malformed header");
    }
    auto count = [&](size_t i) {
        const double v = parse_real(vals[i], meta_path, 2);
        if (v < 0 || v != std::floor(v)) {
            throw ConfigError(meta_path.string() + ": '" + keys[i] + "' must be a count");
        }
        return static_cast<Index>(v);
    };
    Dataset d;
    d.n = count(0);
    d.m = count(1);
    d.p = count(2);
    d.horizon = count(3);
    const Index tu = count(4);
    const Index tx = count(5);
    if (vals[6] != kOrderingTag) {
        throw ConfigError(meta_path.string() + ": unsupported column ordering '" + vals[6] + "'");
    }
    if (vals.size() > 7) d.provenance = vals[7];

    d.x0 = read_columns_csv(dir / "x0.csv");
    d.u = read_columns_csv(dir / "u.csv");
    d.y = read_columns_csv(dir / "y.csv");
    auto expect = [&](const Matrix& m, Index rows, Index cols, const char* name) {
        if (m.rows() != rows || m.cols() != cols) {
            throw DimensionError(std::string(name) + ": expected " + std::to_string(cols) +
                                 " records of " + std::to_string(rows) + " values, found " +
                                 std::to_string(m.cols()) + " records of " +
                                 std::to_string(m.rows()));
        }
    };
    expect(d.x0, d.n, tx, "x0.csv");
    expect(d.u, d.m * d.horizon, tu, "u.csv");
    expect(d.y, d.p * d.horizon, tu * tx, "y.csv");
    return d;
}

}  // namespace kerodeepc::datagen
