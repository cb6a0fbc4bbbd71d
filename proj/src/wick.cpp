#include "cqed/wick.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace cqed::wick {

NormalOrderResult normal_order(const OperatorWord& w) {
    NormalOrderResult out;
    out.word = w;
    auto& ops = out.word.ops;
    // insertion sort moving creators left, counting odd transpositions
    for (std::size_t i = 1; i < ops.size(); ++i) {
        std::size_t j = i;
        while (j > 0 && !ops[j - 1].creator && ops[j].creator) {
            if (ops[j - 1].odd() && ops[j].odd()) out.sign = -out.sign;
            std::swap(ops[j - 1], ops[j]);
            --j;
        }
    }
    out.word.normal_ordered = true;
    return out;
}

namespace {

// contraction of (left annihilating content, right creating content): nonzero
// when letters/species match and left is the annihilator
bool contractable(const LadderOp& l, const LadderOp& r) {
    return !l.creator && r.creator && l.letter == r.letter && l.species == r.species;
}

struct FlatOp {
    LadderOp op;
    int word;
};

void enumerate(const std::vector<FlatOp>& ops, std::vector<bool>& used, int sign,
               std::vector<ContractionFactor>& acc, std::vector<VevTerm>& out) {
    int first = -1;
    for (int i = 0; i < int(ops.size()); ++i)
        if (!used[i]) {
            first = i;
            break;
        }
    if (first < 0) {
        VevTerm t;
        t.sign = sign;
        t.factors = acc;
        out.push_back(std::move(t));
        return;
    }
    if (ops[first].op.creator) return; // <0| creator ... dies
    used[first] = true;
    for (int j = first + 1; j < int(ops.size()); ++j) {
        if (used[j]) continue;
        if (ops[j].word == ops[first].word) continue; // no intra-word pairs
        if (!contractable(ops[first].op, ops[j].op)) continue;
        int crossing = 0;
        if (ops[first].op.odd())
            for (int k = first + 1; k < j; ++k)
                if (!used[k] && ops[k].op.odd()) ++crossing;
        used[j] = true;
        ContractionFactor f;
        f.left = ops[first].op;
        f.right = ops[j].op;
        f.left_pos = first;
        f.right_pos = j;
        acc.push_back(f);
        enumerate(ops, used, (crossing % 2) ? -sign : sign, acc, out);
        acc.pop_back();
        used[j] = false;
    }
    used[first] = false;
}

} // namespace

std::vector<VevTerm> vev(const std::vector<OperatorWord>& words) {
    std::vector<FlatOp> flat;
    std::complex<double> coeff{1.0, 0.0};
    for (int w = 0; w < int(words.size()); ++w) {
        coeff *= words[w].coeff;
        for (auto& op : words[w].ops) flat.push_back({op, w});
    }
    std::vector<VevTerm> out;
    std::vector<bool> used(flat.size(), false);
    std::vector<ContractionFactor> acc;
    enumerate(flat, used, 1, acc, out);
    for (auto& t : out) t.coeff = coeff;
    return out;
}

std::complex<double> vev_value(const std::vector<OperatorWord>& words) {
    std::complex<double> v{0.0, 0.0};
    for (auto& t : vev(words)) v += t.value();
    return v;
}

std::string ContractionFactor::str() const {
    auto name = [](const LadderOp& o) {
        std::string s = o.letter == Letter::A ? "a" : (o.letter == Letter::Ac ? "ac" : "b");
        if (o.creator) s += "+";
        s += "(m" + std::to_string(o.mode) + ",s" + std::to_string(o.label) + ")";
        return s;
    };
    return "[" + name(left) + "," + name(right) + "]";
}

std::string VevTerm::str() const {
    std::ostringstream os;
    os << (sign > 0 ? "+" : "-");
    for (auto& f : factors) os << " " << f.str();
    return os.str();
}

// ---------------------------------------------------------------------------
// structural engine
// ---------------------------------------------------------------------------
namespace {

bool ext_annihilator(Role r) {
    return r == Role::ExtPhotonOut || r == Role::ExtParticleOut || r == Role::ExtFermionOut ||
           r == Role::ExtAntiOut;
}
bool ext_creator(Role r) {
    return r == Role::ExtPhotonIn || r == Role::ExtParticleIn || r == Role::ExtAntiIn;
}

bool struct_contractable(const StructOp& l, const StructOp& r) {
    if (l.species != r.species) return false;
    if (l.external() && r.external()) {
        if (!ext_annihilator(l.role) || !ext_creator(r.role)) return false;
        if (l.role == Role::ExtAntiOut && r.role != Role::ExtAntiIn) return false;
        if ((l.role == Role::ExtParticleOut || l.role == Role::ExtFermionOut) &&
            r.role == Role::ExtAntiIn)
            return false;
        return true;
    }
    if (l.external() && !r.external()) {
        if (!ext_annihilator(l.role)) return false;
        switch (l.role) {
            case Role::ExtPhotonOut: return r.role == Role::PhotonField;
            case Role::ExtParticleOut:
            case Role::ExtFermionOut: return r.role == Role::FermionFieldDag;
            case Role::ExtAntiOut: return r.role == Role::FermionField;
            default: return false;
        }
    }
    if (!l.external() && r.external()) {
        if (!ext_creator(r.role)) return false;
        switch (r.role) {
            case Role::ExtPhotonIn: return l.role == Role::PhotonField;
            case Role::ExtParticleIn: return l.role == Role::FermionField;
            case Role::ExtAntiIn: return l.role == Role::FermionFieldDag;
            default: return false;
        }
    }
    // field-field: distinct words, photon-photon or a fermion pair of
    // opposite daggering
    if (l.word == r.word) return false;
    if (l.role == Role::PhotonField && r.role == Role::PhotonField) return true;
    if (l.role == Role::FermionFieldDag && r.role == Role::FermionField) return true;
    if (l.role == Role::FermionField && r.role == Role::FermionFieldDag) return true;
    return false;
}

void enumerate_struct(const std::vector<StructOp>& ops, std::vector<bool>& used, int sign,
                      std::vector<std::pair<int, int>>& acc, std::vector<StructTerm>& out) {
    int first = -1;
    for (int i = 0; i < int(ops.size()); ++i)
        if (!used[i]) {
            first = i;
            break;
        }
    if (first < 0) {
        StructTerm t;
        t.sign = sign;
        t.pairs = acc;
        for (auto [a, b] : acc)
            if (ops[a].external() && ops[b].external()) t.forward = true;
        out.push_back(std::move(t));
        return;
    }
    if (ext_creator(ops[first].role)) return;
    used[first] = true;
    for (int j = first + 1; j < int(ops.size()); ++j) {
        if (used[j]) continue;
        if (!struct_contractable(ops[first], ops[j])) continue;
        int crossing = 0;
        if (ops[first].fermionic_op())
            for (int k = first + 1; k < j; ++k)
                if (!used[k] && ops[k].fermionic_op()) ++crossing;
        used[j] = true;
        acc.emplace_back(first, j);
        enumerate_struct(ops, used, (crossing % 2) ? -sign : sign, acc, out);
        acc.pop_back();
        used[j] = false;
    }
    used[first] = false;
}

StructOp ext(Role r, ParticleSpecies s) { return {r, s, -1, -1}; }
StructOp field(Role r, ParticleSpecies s, int vertex) { return {r, s, vertex, 10 + vertex}; }

std::vector<StructOp> with_words(std::vector<StructOp> ops) {
    int w = 0;
    for (auto& o : ops)
        if (o.word < 0) o.word = 100 + w++;
    return ops;
}

DysonStructure run(std::vector<StructOp> ops) {
    DysonStructure d;
    d.ops = with_words(std::move(ops));
    std::vector<bool> used(d.ops.size(), false);
    std::vector<std::pair<int, int>> acc;
    enumerate_struct(d.ops, used, 1, acc, d.terms);
    std::ostringstream os;
    for (auto& t : d.terms) {
        if (!t.forward) d.scattering.push_back(t);
        os << t.str(d.ops) << "\n";
    }
    d.rendered = os.str();
    return d;
}

} // namespace

std::vector<StructTerm> wick_structure(const std::vector<StructOp>& ops) {
    std::vector<StructTerm> out;
    std::vector<bool> used(ops.size(), false);
    std::vector<std::pair<int, int>> acc;
    enumerate_struct(ops, used, 1, acc, out);
    return out;
}

std::string StructOp::str() const {
    std::string v = vertex == 0 ? "(X)" : vertex == 1 ? "(Y)" : "";
    switch (role) {
        case Role::ExtPhotonOut: return "f'";
        case Role::ExtPhotonIn: return "f+";
        case Role::ExtParticleOut: return "a'";
        case Role::ExtParticleIn: return "a+";
        case Role::ExtAntiIn: return "ac+";
        case Role::ExtFermionOut: return "b";
        case Role::ExtAntiOut: return "bc";
        case Role::PhotonField: return "A" + v;
        case Role::FermionFieldDag:
            return (species == ParticleSpecies::Muon ? std::string("psi+mu") : std::string("psi+")) + v;
        case Role::FermionField:
            return (species == ParticleSpecies::Muon ? std::string("psimu") : std::string("psi")) + v;
    }
    return "?";
}

std::string StructTerm::str(const std::vector<StructOp>& ops) const {
    std::ostringstream os;
    os << (sign > 0 ? "+" : "-");
    for (auto [a, b] : pairs) os << " [" << ops[a].str() << "," << ops[b].str() << "]";
    if (forward) os << "  (forward)";
    return os.str();
}

DysonStructure dyson_n2_structure(Process p) {
    using S = ParticleSpecies;
    if (p == Process::Compton) {
        std::vector<StructOp> ops;
        ops.push_back(ext(Role::ExtPhotonOut, S::Photon));
        ops.push_back(ext(Role::ExtParticleOut, S::Electron));
        ops.push_back(field(Role::PhotonField, S::Photon, 0));
        ops.push_back(field(Role::FermionFieldDag, S::Electron, 0));
        ops.push_back(field(Role::FermionField, S::Electron, 0));
        ops.push_back(field(Role::PhotonField, S::Photon, 1));
        ops.push_back(field(Role::FermionFieldDag, S::Electron, 1));
        ops.push_back(field(Role::FermionField, S::Electron, 1));
        ops.push_back(ext(Role::ExtParticleIn, S::Electron));
        ops.push_back(ext(Role::ExtPhotonIn, S::Photon));
        return run(std::move(ops));
    }
    // electron-positron in, muon pair out; electron current at the first
    // vertex, muon current at the second
    std::vector<StructOp> ops;
    ops.push_back(ext(Role::ExtFermionOut, S::Muon));
    ops.push_back(ext(Role::ExtAntiOut, S::Muon));
    ops.push_back(field(Role::PhotonField, S::Photon, 0));
    ops.push_back(field(Role::FermionFieldDag, S::Electron, 0));
    ops.push_back(field(Role::FermionField, S::Electron, 0));
    ops.push_back(field(Role::PhotonField, S::Photon, 1));
    ops.push_back(field(Role::FermionFieldDag, S::Muon, 1));
    ops.push_back(field(Role::FermionField, S::Muon, 1));
    ops.push_back(ext(Role::ExtAntiIn, S::Electron));
    ops.push_back(ext(Role::ExtParticleIn, S::Electron));
    return run(std::move(ops));
}

DysonStructure dyson_n1_vector(Process p) {
    using S = ParticleSpecies;
    std::vector<StructOp> ops;
    if (p == Process::Compton) {
        ops.push_back(ext(Role::ExtPhotonOut, S::Photon));
        ops.push_back(ext(Role::ExtParticleOut, S::Electron));
        ops.push_back(field(Role::PhotonField, S::Photon, 0));
        ops.push_back(field(Role::FermionFieldDag, S::Electron, 0));
        ops.push_back(field(Role::FermionField, S::Electron, 0));
        ops.push_back(ext(Role::ExtParticleIn, S::Electron));
        ops.push_back(ext(Role::ExtPhotonIn, S::Photon));
    } else {
        ops.push_back(ext(Role::ExtFermionOut, S::Muon));
        ops.push_back(ext(Role::ExtAntiOut, S::Muon));
        ops.push_back(field(Role::PhotonField, S::Photon, 0));
        ops.push_back(field(Role::FermionFieldDag, S::Electron, 0));
        ops.push_back(field(Role::FermionField, S::Electron, 0));
        ops.push_back(ext(Role::ExtAntiIn, S::Electron));
        ops.push_back(ext(Role::ExtParticleIn, S::Electron));
    }
    return run(std::move(ops));
}

DysonStructure dyson_n1_coulomb(Process p) {
    using S = ParticleSpecies;
    std::vector<StructOp> ops;
    if (p == Process::Compton) {
        // :rho(x) rho(y): is one normal-ordered word; no intra-word pairs
        ops.push_back(ext(Role::ExtPhotonOut, S::Photon));
        ops.push_back(ext(Role::ExtParticleOut, S::Electron));
        StructOp e1 = field(Role::FermionFieldDag, S::Electron, 0);
        StructOp e2 = field(Role::FermionField, S::Electron, 0);
        StructOp d1 = field(Role::FermionFieldDag, S::Electron, 1);
        StructOp d2 = field(Role::FermionField, S::Electron, 1);
        e1.word = e2.word = d1.word = d2.word = 10;
        ops.push_back(e1);
        ops.push_back(e2);
        ops.push_back(d1);
        ops.push_back(d2);
        ops.push_back(ext(Role::ExtParticleIn, S::Electron));
        ops.push_back(ext(Role::ExtPhotonIn, S::Photon));
    } else {
        // cross term rho_e(x) rho_mu(y), still a single normal-ordered word
        ops.push_back(ext(Role::ExtFermionOut, S::Muon));
        ops.push_back(ext(Role::ExtAntiOut, S::Muon));
        StructOp e1 = field(Role::FermionFieldDag, S::Electron, 0);
        StructOp e2 = field(Role::FermionField, S::Electron, 0);
        StructOp m1 = field(Role::FermionFieldDag, S::Muon, 1);
        StructOp m2 = field(Role::FermionField, S::Muon, 1);
        e1.word = e2.word = m1.word = m2.word = 10;
        ops.push_back(e1);
        ops.push_back(e2);
        ops.push_back(m1);
        ops.push_back(m2);
        ops.push_back(ext(Role::ExtAntiIn, S::Electron));
        ops.push_back(ext(Role::ExtParticleIn, S::Electron));
    }
    return run(std::move(ops));
}

DysonStructure dyson_n0(Process p) {
    using S = ParticleSpecies;
    std::vector<StructOp> ops;
    if (p == Process::Compton) {
        ops.push_back(ext(Role::ExtPhotonOut, S::Photon));
        ops.push_back(ext(Role::ExtParticleOut, S::Electron));
        ops.push_back(ext(Role::ExtParticleIn, S::Electron));
        ops.push_back(ext(Role::ExtPhotonIn, S::Photon));
    } else {
        ops.push_back(ext(Role::ExtFermionOut, S::Muon));
        ops.push_back(ext(Role::ExtAntiOut, S::Muon));
        ops.push_back(ext(Role::ExtAntiIn, S::Electron));
        ops.push_back(ext(Role::ExtParticleIn, S::Electron));
    }
    return run(std::move(ops));
}

} // namespace cqed::wick
