#include "cqed/amplitudes.hpp"

namespace cqed {

namespace {

std::array<cplx, 3> conj3(const Vec3c& v) {
    return {std::conj(v[0]), std::conj(v[1]), std::conj(v[2])};
}

} // namespace

cplx compton_pieces(const ComptonKinematics& kin, int sigma, int sigma_p,
                    const PolarizationState& pol_in, const PolarizationState& pol_out, double e,
                    double epsilon) {
    kin.validate();
    const cplx I(0, 1);
    auto u_in = u_spinor(kin.p, sigma, kin.m);
    auto u_out = u_spinor(kin.p_prime, sigma_p, kin.m);
    auto ubar = adjoint(u_out);

    Mat4 eslash = slash3(pol_in.vector());
    Mat4 epslash = slash3(conj3(pol_out.vector()));

    auto prop_s = dirac_propagator(kin.p + kin.k, kin.m, epsilon);
    auto prop_u = dirac_propagator(kin.p - kin.k_prime, kin.m, epsilon);

    Mat4 braced = epslash * prop_s.numerator * gammas()[0] * eslash * (1.0 / prop_s.denominator);
    braced = braced + eslash * prop_u.numerator * gammas()[0] * epslash * (1.0 / prop_u.denominator);

    return I * e * e * row_mat_col(ubar, braced, u_in.c);
}

AmplitudeResult compton_final(const ComptonKinematics& kin, int sigma, int sigma_p,
                              const PolarizationState& pol_in, const PolarizationState& pol_out,
                              double e) {
    kin.validate();
    const cplx I(0, 1);
    auto u_in = u_spinor(kin.p, sigma, kin.m);
    auto u_out = u_spinor(kin.p_prime, sigma_p, kin.m);
    auto ubar = adjoint(u_out);

    Mat4 eslash = slash3(pol_in.vector());
    Mat4 epslash = slash3(conj3(pol_out.vector()));
    Mat4 mid_s = slash(kin.p) + slash(kin.k) + Mat4::identity() * cplx(kin.m);
    Mat4 mid_u = slash(kin.p) - slash(kin.k_prime) + Mat4::identity() * cplx(kin.m);
    double two_pk = 2 * kin.p.dot(kin.k);
    double two_pkp = 2 * kin.p.dot(kin.k_prime);

    Mat4 braced = epslash * mid_s * eslash * (1.0 / two_pk);
    braced = braced + eslash * mid_u * epslash * (1.0 / (-two_pkp));

    AmplitudeResult r;
    r.value = -I * e * e * row_mat_col(ubar, braced, u_in.c);
    r.process = "compton";
    r.labels = "sigma=" + std::to_string(sigma) + ",sigma'=" + std::to_string(sigma_p);
    return r;
}

namespace {

void require_split_frame(const PairKinematics& kin) {
    double nx = kin.k.px + kin.k_prime.px;
    double ny = kin.k.py + kin.k_prime.py;
    double nz = kin.k.pz + kin.k_prime.pz;
    double n = std::sqrt(nx * nx + ny * ny + nz * nz);
    double scale = kin.k.e + kin.k_prime.e;
    if (n <= 1e-12 * scale)
        throw FrameError("transverse/Coulomb split undefined at zero total 3-momentum");
}

} // namespace

cplx eemumu_transverse(const PairKinematics& kin, int sigma, int sigma_p, int lambda,
                       int lambda_p, double e) {
    kin.validate();
    require_split_frame(kin);
    const cplx I(0, 1);
    FourMomentum q = kin.k + kin.k_prime;
    Vec3 qv{q.px, q.py, q.pz};
    Mat3 N = transverse_projector(qv);

    auto u_e = u_spinor(kin.p, sigma, kin.m_e);
    auto v_e = v_spinor(kin.p_prime, sigma_p, kin.m_e);
    auto u_mu = u_spinor(kin.k, lambda, kin.m_mu);
    auto v_mu = v_spinor(kin.k_prime, lambda_p, kin.m_mu);
    auto vbar_e = adjoint(v_e);
    auto ubar_mu = adjoint(u_mu);

    cplx sum = 0;
    for (int i = 0; i < 3; ++i) {
        cplx left = row_mat_col(vbar_e, gammas()[i + 1], u_e.c);
        if (left == 0.0) continue;
        for (int j = 0; j < 3; ++j) {
            if (N[i][j] == 0.0) continue;
            cplx right = row_mat_col(ubar_mu, gammas()[j + 1], v_mu.c);
            sum += left * N[i][j] * right;
        }
    }
    return -I * e * e / q.mass2() * sum;
}

cplx eemumu_coulomb(const PairKinematics& kin, int sigma, int sigma_p, int lambda, int lambda_p,
                    double e) {
    kin.validate();
    require_split_frame(kin);
    const cplx I(0, 1);
    FourMomentum q = kin.k + kin.k_prime;

    auto u_e = u_spinor(kin.p, sigma, kin.m_e);
    auto v_e = v_spinor(kin.p_prime, sigma_p, kin.m_e);
    auto u_mu = u_spinor(kin.k, lambda, kin.m_mu);
    auto v_mu = v_spinor(kin.k_prime, lambda_p, kin.m_mu);

    cplx left = 0, right = 0;
    for (int i = 0; i < 4; ++i) {
        left += std::conj(v_e.c[i]) * u_e.c[i];   // v^dag(p') u(p)
        right += std::conj(u_mu.c[i]) * v_mu.c[i]; // u^dag(k) v(k')
    }
    // the time-ordered instantaneous exchange contributes 2 theta(0) = 1
    double step = 2.0 * theta_at_zero;
    return -I * e * e * step * coulomb_kernel(q) * left * right;
}

AmplitudeResult eemumu_covariant(const PairKinematics& kin, int sigma, int sigma_p, int lambda,
                                 int lambda_p, double e) {
    kin.validate();
    const cplx I(0, 1);
    FourMomentum q = kin.k + kin.k_prime;
    double q2 = q.mass2();
    if (q2 == 0.0) throw PoleError{};

    auto u_e = u_spinor(kin.p, sigma, kin.m_e);
    auto v_e = v_spinor(kin.p_prime, sigma_p, kin.m_e);
    auto u_mu = u_spinor(kin.k, lambda, kin.m_mu);
    auto v_mu = v_spinor(kin.k_prime, lambda_p, kin.m_mu);
    auto vbar_e = adjoint(v_e);
    auto ubar_mu = adjoint(u_mu);

    cplx sum = 0;
    for (int a = 0; a < 4; ++a) {
        cplx left = row_mat_col(vbar_e, gammas()[a], u_e.c);
        if (left == 0.0) continue;
        cplx right = row_mat_col(ubar_mu, gammas()[a], v_mu.c);
        sum += metric(a, a) * left * right;
    }
    AmplitudeResult r;
    r.value = I * e * e / q2 * sum;
    r.process = "eemumu";
    r.labels = "sigma=" + std::to_string(sigma) + ",sigma'=" + std::to_string(sigma_p) +
               ",lambda=" + std::to_string(lambda) + ",lambda'=" + std::to_string(lambda_p);
    return r;
}

} // namespace cqed
