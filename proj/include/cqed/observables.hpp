#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "cqed/amplitudes.hpp"

namespace cqed {

enum class ScatterProcess { Compton, EeToMuMu };

struct ProcessParams {
    double e = 0.30282211985966434; // sqrt(4 pi / 137.035999)
    double m_e = 0.000511;          // GeV
    double m_mu = 0.105658;         // GeV
};

inline double alpha_of(const ProcessParams& p) { return p.e * p.e / (4 * M_PI); }
inline double coupling_for_alpha(double alpha) { return std::sqrt(4 * M_PI * alpha); }

// |M|^2 averaged over initial spins (and helicities), summed over final,
// assembled from explicit spinor amplitudes.
double spin_sum(ScatterProcess proc, const ProcessParams& par, double sqrt_s, double cos_theta,
                double phi);

double compton_spin_sum(const ComptonKinematics& kin, double e);
double eemumu_spin_sum(const PairKinematics& kin, double e);

// Trace-based oracles: no explicit spinors, only gamma matrices and the
// completeness sums.
double trace_oracle_compton(const ComptonKinematics& kin, double e);
double trace_oracle_eemumu(const PairKinematics& kin, double e);

struct CrossSectionPoint {
    std::string process;
    double sqrt_s = 0;
    double cos_theta = 0; // NaN-free; totals use the flag below
    bool total = false;
    double value = 0;     // GeV^-2
    double mc_error = 0;
};

// Differential cross section dsigma/dOmega in the CM frame.
CrossSectionPoint dsigma_domega(ScatterProcess proc, const ProcessParams& par, double sqrt_s,
                                double cos_theta);

// Stratified MC total cross section; deterministic for fixed (seed, n);
// identical results from the serial reference and the parallel kernel.
struct TotalResult {
    double sigma = 0;
    double mc_error = 0;
};

TotalResult total_sigma(ScatterProcess proc, const ProcessParams& par, double sqrt_s,
                        std::uint64_t n_samples, std::uint64_t seed);
TotalResult total_sigma_serial(ScatterProcess proc, const ProcessParams& par, double sqrt_s,
                               std::uint64_t n_samples, std::uint64_t seed);

// counter-based per-sample randomness (shard-independent by construction)
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
inline double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(index + 0x1000 * stream));
    return double(h >> 11) * 0x1.0p-53;
}

// GeV^-2 to nanobarn
inline constexpr double gev2_to_nb = 0.3893793721e6;

} // namespace cqed
