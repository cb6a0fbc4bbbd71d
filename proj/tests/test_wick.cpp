#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <vector>

#include "cqed/wick.hpp"

using namespace cqed::wick;
using cd = std::complex<double>;

namespace {

LadderOp op(Letter l, bool cr, ParticleSpecies s, int mode = 0, int label = 0) {
    return {l, cr, s, mode, label};
}

// --- truncated-Fock oracle -------------------------------------------------
// One fermionic mode (occupation <= 1) and one photon mode (occupation <=
// cap), unit normalization [b, b+] = 1, {a, a+} = 1. States indexed
// (nf, nb) -> nf * (cap+1) + nb.
struct FockOracle {
    int cap;
    int dim;
    explicit FockOracle(int cap_) : cap(cap_), dim(2 * (cap_ + 1)) {}

    int idx(int nf, int nb) const { return nf * (cap + 1) + nb; }

    std::vector<cd> apply(const LadderOp& o, const std::vector<cd>& v) const {
        std::vector<cd> r(dim, 0.0);
        for (int nf = 0; nf < 2; ++nf)
            for (int nb = 0; nb <= cap; ++nb) {
                cd amp = v[idx(nf, nb)];
                if (amp == 0.0) continue;
                if (o.species == ParticleSpecies::Photon) {
                    if (o.creator && nb < cap)
                        r[idx(nf, nb + 1)] += amp * std::sqrt(double(nb + 1));
                    if (!o.creator && nb > 0) r[idx(nf, nb - 1)] += amp * std::sqrt(double(nb));
                } else {
                    if (o.creator && nf == 0) r[idx(1, nb)] += amp;
                    if (!o.creator && nf == 1) r[idx(0, nb)] += amp;
                }
            }
        return r;
    }

    cd vacuum_expectation(const std::vector<LadderOp>& word) const {
        std::vector<cd> v(dim, 0.0);
        v[idx(0, 0)] = 1.0;
        for (auto it = word.rbegin(); it != word.rend(); ++it) v = apply(*it, v);
        return v[idx(0, 0)];
    }
};

} // namespace

TEST_CASE("normal ordering: creators left, fermionic sign exposed") {
    OperatorWord w;
    w.ops = {op(Letter::B, false, ParticleSpecies::Photon), op(Letter::B, true, ParticleSpecies::Photon)};
    auto r = normal_order(w);
    CHECK(r.word.ops[0].creator);
    CHECK_FALSE(r.word.ops[1].creator);
    CHECK(r.sign == 1); // bosonic swap

    OperatorWord f;
    f.ops = {op(Letter::A, false, ParticleSpecies::Electron), op(Letter::A, true, ParticleSpecies::Electron)};
    auto rf = normal_order(f);
    CHECK(rf.word.ops[0].creator);
    CHECK(rf.sign == -1); // one fermionic transposition

    OperatorWord done;
    done.ops = {op(Letter::A, true, ParticleSpecies::Electron), op(Letter::A, false, ParticleSpecies::Electron)};
    auto rd = normal_order(done);
    CHECK(rd.sign == 1);
    CHECK(rd.word.ops[0].creator);
}

TEST_CASE("vev basics: matched content, unmatched content, signs") {
    auto word1 = [&](LadderOp o) {
        OperatorWord w;
        w.ops = {o};
        return w;
    };
    // <0| a a+ |0> = 1
    CHECK(vev_value({word1(op(Letter::A, false, ParticleSpecies::Electron)),
                     word1(op(Letter::A, true, ParticleSpecies::Electron))}) == cd(1.0));
    // unmatched creation content vanishes
    CHECK(vev_value({word1(op(Letter::A, true, ParticleSpecies::Electron)),
                     word1(op(Letter::A, false, ParticleSpecies::Electron))}) == cd(0.0));
    CHECK(vev_value({word1(op(Letter::B, true, ParticleSpecies::Photon))}) == cd(0.0));
    // species / letter mismatches vanish
    CHECK(vev_value({word1(op(Letter::A, false, ParticleSpecies::Electron)),
                     word1(op(Letter::Ac, true, ParticleSpecies::Electron))}) == cd(0.0));
    CHECK(vev_value({word1(op(Letter::A, false, ParticleSpecies::Electron, 3)),
                     word1(op(Letter::A, true, ParticleSpecies::Electron, 4))}) == cd(0.0));

    // fermionic sign: swapping two adjacent fermionic ops flips the vev
    std::vector<OperatorWord> ws = {
        word1(op(Letter::A, false, ParticleSpecies::Electron, 0)),
        word1(op(Letter::Ac, false, ParticleSpecies::Electron, 1)),
        word1(op(Letter::A, true, ParticleSpecies::Electron, 0)),
        word1(op(Letter::Ac, true, ParticleSpecies::Electron, 1)),
    };
    cd v1 = vev_value(ws);
    std::swap(ws[2], ws[3]);
    cd v2 = vev_value(ws);
    CHECK(v1 == -v2);
    CHECK(std::abs(v1) == 1.0);
}

TEST_CASE("no intra-word contractions for normal-ordered words") {
    OperatorWord pair;
    pair.ops = {op(Letter::B, true, ParticleSpecies::Photon),
                op(Letter::B, false, ParticleSpecies::Photon)};
    pair.normal_ordered = true;
    CHECK(vev_value({pair}) == cd(0.0));
    // but across words the same content contracts
    OperatorWord left, right;
    left.ops = {op(Letter::B, false, ParticleSpecies::Photon)};
    right.ops = {op(Letter::B, true, ParticleSpecies::Photon)};
    CHECK(vev_value({left, right}) == cd(1.0));
}

TEST_CASE("engine agrees with the truncated-Fock oracle on all short words") {
    // all words of length <= 6 over the 2-mode register {a, a+, b, b+};
    // occupation cap 3 accommodates every length-6 word
    FockOracle oracle(3);
    std::vector<LadderOp> alphabet = {
        op(Letter::A, false, ParticleSpecies::Electron, 0),
        op(Letter::A, true, ParticleSpecies::Electron, 0),
        op(Letter::B, false, ParticleSpecies::Photon, 1),
        op(Letter::B, true, ParticleSpecies::Photon, 1),
    };
    long long checked = 0;
    for (int len = 0; len <= 6; ++len) {
        std::vector<int> digits(len, 0);
        for (;;) {
            std::vector<LadderOp> word;
            std::vector<OperatorWord> words;
            for (int d : digits) {
                word.push_back(alphabet[d]);
                OperatorWord w;
                w.ops = {alphabet[d]};
                words.push_back(w);
            }
            cd lhs = vev_value(words);
            cd rhs = oracle.vacuum_expectation(word);
            CHECK(std::abs(lhs - rhs) < 1e-12);
            ++checked;
            int k = len - 1;
            while (k >= 0 && digits[k] == 3) digits[k--] = 0;
            if (k < 0) break;
            ++digits[k];
        }
    }
    CHECK(checked == 1 + 4 + 16 + 64 + 256 + 1024 + 4096);

    // the occupation <= 2 register agrees on words with at most two photon
    // creators (deeper states cannot be represented there)
    FockOracle shallow(2);
    std::vector<LadderOp> w1 = {alphabet[2], alphabet[2], alphabet[3], alphabet[3]};
    std::vector<OperatorWord> ws;
    for (auto& o : w1) {
        OperatorWord w;
        w.ops = {o};
        ws.push_back(w);
    }
    CHECK(std::abs(vev_value(ws) - shallow.vacuum_expectation(w1)) < 1e-12);
}

TEST_CASE("N=0 forward term is the two-delta product") {
    auto d = dyson_n0(Process::Compton);
    REQUIRE(d.terms.size() == 1);
    CHECK(d.terms[0].forward);
    CHECK(d.terms[0].pairs.size() == 2);
    CHECK(d.scattering.empty());

    auto p = dyson_n0(Process::PairToMuons);
    // distinct species in and out: no surviving term at all
    CHECK(p.terms.empty());
}

TEST_CASE("N=1 terms vanish as expected") {
    CHECK(dyson_n1_vector(Process::Compton).terms.empty());
    CHECK(dyson_n1_vector(Process::PairToMuons).terms.empty());
    CHECK(dyson_n1_coulomb(Process::Compton).terms.empty());

    auto c = dyson_n1_coulomb(Process::PairToMuons);
    REQUIRE(c.terms.size() == 1);
    CHECK_FALSE(c.terms[0].forward);
    CHECK(c.terms[0].pairs.size() == 4);
}

TEST_CASE("Compton N=2 yields exactly the four scattering terms") {
    auto d = dyson_n2_structure(Process::Compton);
    CHECK(d.scattering.size() == 4);

    // index the ops: photon fields at positions 2 (X) and 5 (Y); fermion
    // daggers at 3 (X), 6 (Y); fermions at 4 (X), 7 (Y)
    auto has_pair = [&](const StructTerm& t, int a, int b) {
        for (auto [x, y] : t.pairs)
            if ((x == a && y == b) || (x == b && y == a)) return true;
        return false;
    };
    int lam = 0, lam_tilde = 0, particle_prop = 0, antiparticle_prop = 0;
    for (auto& t : d.scattering) {
        CHECK(t.pairs.size() == 5);
        bool photon_xf = has_pair(t, 0, 2) && has_pair(t, 5, 9); // f'-A(X), A(Y)-f+
        bool photon_yf = has_pair(t, 0, 5) && has_pair(t, 2, 9); // f'-A(Y), A(X)-f+
        CHECK((photon_xf || photon_yf));
        if (photon_xf) ++lam;
        if (photon_yf) ++lam_tilde;
        bool pprop = has_pair(t, 4, 6);  // psi(X) with psi+(Y)
        bool aprop = has_pair(t, 3, 7);  // psi+(X) with psi(Y)
        CHECK((pprop || aprop));
        if (pprop) {
            ++particle_prop;
            // wiring: a' pairs with psi+(X), psi(Y) pairs with a+
            CHECK(has_pair(t, 1, 3));
            CHECK(has_pair(t, 7, 8));
        }
        if (aprop) {
            ++antiparticle_prop;
            CHECK(has_pair(t, 1, 6));
            CHECK(has_pair(t, 4, 8));
        }
    }
    CHECK(lam == 2);
    CHECK(lam_tilde == 2);
    CHECK(particle_prop == 2);
    CHECK(antiparticle_prop == 2);

    // forward-tagged terms are exposed rather than dropped silently
    CHECK(d.terms.size() > d.scattering.size());
    CHECK(!d.rendered.empty());
}

TEST_CASE("pair production N=2 has the single exchange pattern") {
    auto d = dyson_n2_structure(Process::PairToMuons);
    REQUIRE(d.scattering.size() == 1);
    const auto& t = d.scattering[0];
    CHECK(t.pairs.size() == 5);
    auto has_pair = [&](int a, int b) {
        for (auto [x, y] : t.pairs)
            if ((x == a && y == b) || (x == b && y == a)) return true;
        return false;
    };
    // photon propagator between the vertices
    CHECK(has_pair(2, 5));
    // electron current soaks up the incoming pair, muon current the outgoing
    CHECK(has_pair(3, 8));  // psi+(X) with ac+
    CHECK(has_pair(4, 9));  // psi(X) with a+
    CHECK(has_pair(0, 6));  // b with psimu+(Y)
    CHECK(has_pair(1, 7));  // bc with psimu(Y)
}

TEST_CASE("single-species density between mismatched pair states vanishes") {
    // <0| b b^c :rho_e(x) rho_e(y): a^c+ a+ |0>: the muon annihilators find
    // nothing to match in an electron density word
    using S = ParticleSpecies;
    std::vector<StructOp> ops;
    ops.push_back({Role::ExtFermionOut, S::Muon, -1, 100});
    ops.push_back({Role::ExtAntiOut, S::Muon, -1, 101});
    ops.push_back({Role::FermionFieldDag, S::Electron, 0, 10});
    ops.push_back({Role::FermionField, S::Electron, 0, 10});
    ops.push_back({Role::FermionFieldDag, S::Electron, 1, 10});
    ops.push_back({Role::FermionField, S::Electron, 1, 10});
    ops.push_back({Role::ExtAntiIn, S::Electron, -1, 102});
    ops.push_back({Role::ExtParticleIn, S::Electron, -1, 103});
    CHECK(wick_structure(ops).empty());
}
