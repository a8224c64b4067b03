#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kerodeepc/numerics.hpp"
#include "kerodeepc/plant.hpp"

namespace kerodeepc::datagen {

/// Tag stored with every dataset: Y column j*Tx + i belongs to input
/// sequence j and initial state i (both zero-based).
inline constexpr const char* kOrderingTag = "u-outer/x-inner";

/// Offline trajectory data for the product-kernel operator.
struct Dataset {
    Matrix x0;  ///< n × Tx initial states
    Matrix u;   ///< (m·N) × Tu stacked input sequences
    Matrix y;   ///< (p·N) × (Tu·Tx) stacked output sequences
    Index n = 0, m = 0, p = 0, horizon = 0;
    std::string provenance;  ///< free-form tag written to meta.csv (config hash)

    [[nodiscard]] Index tu() const noexcept { return u.cols(); }
    [[nodiscard]] Index tx() const noexcept { return x0.cols(); }
    [[nodiscard]] Index column_index(Index input_seq, Index init_state) const noexcept {
        return input_seq * tx() + init_state;
    }
    /// Throws DimensionError if the matrices disagree with the counts.
    void validate() const;
};

/// Stacked-variable data z_i = col(x_i, u_i, ..., u_{i+N-1}) with the N outputs that follow.
struct StackedData {
    Matrix z;  ///< (n + m·N) × T
    Matrix y;  ///< (p·N) × T
    Index state_dim = 0;
};

struct ExcitationConfig {
    Index length = 100;
    double band_low = 0.0;   ///< normalized frequency, 1 = Nyquist
    double band_high = 1.0;
    double amplitude_low = -1.0;
    double amplitude_high = 1.0;
    Index num_sinusoids = 25;
    Index num_trials = 40;  ///< random phase draws; the lowest crest factor wins
    std::uint64_t seed = 0;

    void validate() const;
};

/// Seeded multisine: per channel a sum of sinusoids with frequencies drawn in
/// the band and random phases, affinely rescaled onto the amplitude range.
/// Returns m × length.
[[nodiscard]] Matrix multisine(const ExcitationConfig& cfg, Index m);

/// Columns j = 0..count-1 hold col(s_j, ..., s_{j+N-1}) of signal `s` (m × L).
[[nodiscard]] Matrix hankel_windows(const Matrix& signal, Index horizon, Index count);

/// Axis-aligned box, one [lo, hi] pair per coordinate.
struct Box {
    Vector lower;
    Vector upper;

    [[nodiscard]] bool contains(const Eigen::Ref<const Vector>& x, double slack = 0.0) const;
    void validate(Index dim) const;
};

/// First `count` Halton points (bases = first `dim` primes, indices 1..count)
/// mapped into the box. Returns dim × count.
[[nodiscard]] Matrix halton(Index dim, Index count, const Box& box);

enum class CentroidInit { Halton, Uniform };

struct KMeansConfig {
    Index k = 1;
    Index max_iter = 300;
    double tol = 0.0;  ///< stop early when every centroid moves less than this
    CentroidInit init = CentroidInit::Halton;
    std::uint64_t seed = 0;
    Box box;
};

struct KMeansResult {
    Matrix centroids;                 ///< n × k
    std::vector<Index> assignment;    ///< cluster of each point
    std::vector<double> objective;    ///< within-cluster sum of squares, one entry per assignment pass
    Index iterations = 0;
    bool converged = false;
};

/// Lloyd iterations with squared Euclidean distance. Empty clusters are reseeded
/// at the point farthest from its current centroid. Points are the columns of `points`.
[[nodiscard]] KMeansResult kmeans(const Matrix& points, const KMeansConfig& cfg);

struct InitialConditions {
    Matrix x0;       ///< n × Tx centroids
    Matrix visited;  ///< n × T_u,ini states visited by the excitation rollout
    Matrix excitation;
    KMeansResult clustering;
};

/// Excites the plant from x_start, clusters the visited states, returns the centroids.
[[nodiscard]] InitialConditions generate_initial_conditions(const plant::Plant& plant,
                                                            const Eigen::Ref<const Vector>& x_start,
                                                            const ExcitationConfig& exc,
                                                            const KMeansConfig& km);

/// Simulates every (initial state, input sequence) pair. `inputs` is (m·N) × Tu.
[[nodiscard]] Dataset generate_dataset(const plant::Plant& plant, const Matrix& x0,
                                       const Matrix& inputs, Index horizon);

/// One long rollout under `signal` (m × (T+N-1)) from x_start, cut into T stacked samples.
[[nodiscard]] StackedData generate_stacked_data(const plant::Plant& plant,
                                                const Eigen::Ref<const Vector>& x_start,
                                                const Matrix& signal, Index horizon);

/// Writes meta.csv, x0.csv, u.csv and y.csv into `dir` (created if missing).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Reads the four files written by save_dataset.
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& dir);

/// One record per column, full round-trip precision.
void write_columns_csv(const std::filesystem::path& file, const Matrix& m);
/// Reads records of equal length back into columns.
[[nodiscard]] Matrix read_columns_csv(const std::filesystem::path& file);

}  // namespace kerodeepc::datagen
