#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mra/core.hpp"

namespace mra {

/// M noisy cyclically shifted copies of a length-N signal, one per row.
/// The ground-truth fields are present only for synthetic data.
struct ObservationSet {
    Matrix data;
    std::uint64_t seed = 0;
    std::optional<NoiseModel> generating_noise;
    std::optional<std::vector<std::size_t>> true_shifts;
    /// Per-sample component label (1 or 2), M x N.
    std::optional<std::vector<std::uint8_t>> true_components;

    std::size_t m() const noexcept { return data.rows(); }
    std::size_t n() const noexcept { return data.cols(); }
    std::span<const double> row(std::size_t i) const noexcept { return data.row(i); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data(i, j); }
    std::uint8_t component(std::size_t i, std::size_t j) const { return (*true_components)[i * n() + j]; }
};

/// Checks row lengths, finiteness and the ground-truth ranges.
void validate(const ObservationSet& obs);

struct GenSpec {
    std::size_t m = 1;
    NoiseModel noise;
    std::uint64_t seed = 0;
};

Signal make_random_signal(std::size_t n, std::uint64_t seed);

/// Ones at 1-based positions 30..60, zeros elsewhere.
Signal make_piecewise_signal(std::size_t n);

ObservationSet generate_observations(const Signal& u, const GenSpec& spec);

/// The standard-normal draw behind sample (i, j); multiply by sigma_k to get
/// the additive noise.
double standard_noise_draw(std::uint64_t seed, std::size_t n, std::size_t i, std::size_t j);

// Text container, see README "Observation files":
//   line 1   mra-observations,1
//   line 2   m,n,seed,alpha,sigma1_sq,sigma2_sq,has_truth
//   line 3   values for line 2 (noise fields empty when unknown)
//   m lines  comma-separated samples of f_i, %.17g
//   if has_truth: m lines "shift,k_0,...,k_{n-1}"
void write_observations(std::ostream& out, const ObservationSet& obs);
ObservationSet read_observations(std::istream& in);
void save_observations(const std::filesystem::path& path, const ObservationSet& obs);
ObservationSet load_observations(const std::filesystem::path& path);

/// Whitespace- or comma-separated samples.
Signal load_signal(const std::filesystem::path& path);
void save_signal(const std::filesystem::path& path, const Signal& u);

}  // namespace mra
