#pragma once

#include <complex>
#include <string>
#include <vector>

namespace cqed::wick {

// Ladder-operator letters: a (particle), ac (antiparticle), b (photon-type).
enum class Letter { A, Ac, B };
enum class ParticleSpecies { Electron, Muon, Photon };

inline bool fermionic(ParticleSpecies s) { return s != ParticleSpecies::Photon; }

struct LadderOp {
    Letter letter = Letter::A;
    bool creator = false;
    ParticleSpecies species = ParticleSpecies::Electron;
    int mode = 0;   // discrete momentum label
    int label = 0;  // spin or helicity

    bool odd() const { return fermionic(species); }
    bool operator==(const LadderOp& o) const {
        return letter == o.letter && creator == o.creator && species == o.species &&
               mode == o.mode && label == o.label;
    }
};

struct OperatorWord {
    std::vector<LadderOp> ops;
    std::complex<double> coeff{1.0, 0.0};
    bool normal_ordered = false;
};

struct NormalOrderResult {
    OperatorWord word; // creators left of annihilators; coefficient untouched
    int sign = 1;      // fermionic transposition sign, reported separately
};

NormalOrderResult normal_order(const OperatorWord& w);

// One contracted pairing in a vacuum expectation value. The delta factors
// over mode and spin labels are kept symbolic; value() evaluates them for
// concrete labels with unit mode normalization.
struct ContractionFactor {
    LadderOp left, right;
    int left_pos = 0, right_pos = 0;

    bool delta_nonzero() const { return left.mode == right.mode && left.label == right.label; }
    std::string str() const;
};

struct VevTerm {
    int sign = 1;
    std::complex<double> coeff{1.0, 0.0};
    std::vector<ContractionFactor> factors;

    // numeric value with unit normalization per mode
    std::complex<double> value() const {
        for (auto& f : factors)
            if (!f.delta_nonzero()) return {0.0, 0.0};
        return coeff * double(sign);
    }
    std::string str() const;
};

// Vacuum expectation of a product of normal-ordered words; contractions
// connect different words only.
std::vector<VevTerm> vev(const std::vector<OperatorWord>& words);

// numeric collapse of the term list
std::complex<double> vev_value(const std::vector<OperatorWord>& words);

// ---------------------------------------------------------------------------
// Dyson-series structure for the second-order matrix elements. Operators are
// tagged with their role so the surviving contraction patterns can be checked
// against the expected ladder wiring.
// ---------------------------------------------------------------------------
enum class Role {
    ExtPhotonOut,   // f'
    ExtPhotonIn,    // f-dagger
    ExtParticleOut, // a'
    ExtParticleIn,  // a-dagger
    ExtAntiIn,      // a^c-dagger (incoming antiparticle)
    ExtFermionOut,  // b (outgoing particle of the other species)
    ExtAntiOut,     // b^c (outgoing antiparticle of the other species)
    PhotonField,    // x_j at a vertex
    FermionFieldDag,
    FermionField,
};

struct StructOp {
    Role role;
    ParticleSpecies species;
    int vertex = -1; // 0 = first interaction point, 1 = second, -1 external
    int word = -1;

    bool external() const { return vertex < 0; }
    bool fermionic_op() const { return fermionic(species); }
    std::string str() const;
};

struct StructTerm {
    int sign = 1;
    std::vector<std::pair<int, int>> pairs; // positions into the op list
    bool forward = false;                   // contains an external-external factor
    std::string str(const std::vector<StructOp>& ops) const;
};

std::vector<StructTerm> wick_structure(const std::vector<StructOp>& ops);

enum class Process { Compton, PairToMuons };

struct DysonStructure {
    std::vector<StructOp> ops;
    std::vector<StructTerm> terms;          // all surviving contraction patterns
    std::vector<StructTerm> scattering;     // terms with no forward factor
    std::string rendered;                   // text snapshot of the term list
};

// N=2 photon-exchange structure for the given process.
DysonStructure dyson_n2_structure(Process p);

// N=1 structures: the vector-coupling piece (vanishing for both processes)
// and the instantaneous Coulomb piece (vanishing for Compton, one term for
// the pair process).
DysonStructure dyson_n1_vector(Process p);
DysonStructure dyson_n1_coulomb(Process p);

// N=0 forward term.
DysonStructure dyson_n0(Process p);

} // namespace cqed::wick
