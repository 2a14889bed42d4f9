#include "dtctrl/variation.hpp"

#include <cmath>

#include "dtctrl/errors.hpp"

namespace dtctrl {

namespace {

struct DualVector {
  Eigen::VectorXd val, dir;
};

struct DualMatrix {
  Eigen::MatrixXd val, dir;
};

// f and df_u/dx at a transported point: the slot-2 seed walks the state
// coordinates, d2/d12 give the Jacobian entry and its d1-directional
// derivative.
void dual_f_and_jac_x(const DiscreteSystem& sys, std::span<const HyperDual> x,
                      const Eigen::VectorXd& u, DualVector& f_out, DualMatrix& A_out) {
  const int n = sys.n();
  HDVec xin(x.begin(), x.end());
  HDVec uin = lift_vector(u);
  HDVec out(static_cast<std::size_t>(n));
  f_out.val.resize(n);
  f_out.dir.resize(n);
  A_out.val.resize(n, n);
  A_out.dir.resize(n, n);
  for (int q = 0; q < n; ++q) {
    xin[static_cast<std::size_t>(q)].d2 = 1.0;
    sys.eval_f(xin, uin, out);
    xin[static_cast<std::size_t>(q)].d2 = 0.0;
    for (int p = 0; p < n; ++p) {
      const HyperDual& h = out[static_cast<std::size_t>(p)];
      A_out.val(p, q) = h.d2;
      A_out.dir(p, q) = h.d12;
      if (q == 0) {
        f_out.val(p) = h.v;
        f_out.dir(p) = h.d1;
      }
    }
  }
}

void dual_jac_u_col(const DiscreteSystem& sys, std::span<const HyperDual> x,
                    const Eigen::VectorXd& u, int r, DualVector& b_out) {
  const int n = sys.n();
  HDVec xin(x.begin(), x.end());
  HDVec uin = lift_vector(u);
  HDVec out(static_cast<std::size_t>(n));
  uin[static_cast<std::size_t>(r)].d2 = 1.0;
  sys.eval_f(xin, uin, out);
  b_out.val.resize(n);
  b_out.dir.resize(n);
  for (int p = 0; p < n; ++p) {
    b_out.val(p) = out[static_cast<std::size_t>(p)].d2;
    b_out.dir(p) = out[static_cast<std::size_t>(p)].d12;
  }
}

// Solve (A + eps A')(v + eps v') = b + eps b' over the transport ring:
// two real solves with one factorization.
DualVector dual_solve(const DualMatrix& A, const DualVector& b) {
  const auto lu = gated_lu(A.val);
  DualVector v;
  v.val = lu.solve(b.val);
  v.dir = lu.solve(b.dir - A.dir * v.val);
  return v;
}

void write_dual(std::span<HyperDual> out, const DualVector& v) {
  for (Eigen::Index p = 0; p < v.val.size(); ++p) {
    out[static_cast<std::size_t>(p)] = HyperDual(v.val(p), v.dir(p), 0.0, 0.0);
  }
}

Eigen::VectorXd richardson_derivative(const std::function<Eigen::VectorXd(double)>& g,
                                      double h) {
  auto central = [&](double hh) { return ((g(hh) - g(-hh)) / (2.0 * hh)).eval(); };
  return (4.0 * central(h / 2.0) - central(h)) / 3.0;
}

}  // namespace

Eigen::VectorXd x_plus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, int r) {
  return gated_solve(sys.jac_x(x, u), sys.jac_u(x, u).col(r));
}

Eigen::VectorXd y_plus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, int r) {
  const Eigen::VectorXd y = sys.step(x, u);
  auto curve = [&](double eps) {
    Eigen::VectorXd up = u;
    up(r) += eps;
    return sys.inverse_step(y, up, x);
  };
  return richardson_derivative(curve, 1e-5);
}

Eigen::VectorXd x_minus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u, int r) {
  const Eigen::VectorXd hint = sys.inverse_step(x, u);
  auto curve = [&](double eps) {
    Eigen::VectorXd up = u;
    up(r) += eps;
    return sys.step(sys.inverse_step(x, up, hint), u);
  };
  return richardson_derivative(curve, 1e-5);
}

Eigen::VectorXd y_minus(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u, int r) {
  const Eigen::VectorXd pre = sys.inverse_step(x, u);
  auto curve = [&](double eps) {
    Eigen::VectorXd up = u;
    up(r) += eps;
    return sys.step(pre, up);
  };
  return richardson_derivative(curve, 1e-5);
}

Eigen::VectorXd ad_apply(const DiscreteSystem& sys, const Eigen::VectorXd& u,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& field,
                         const Eigen::VectorXd& x) {
  return gated_solve(sys.jac_x(x, u), field(sys.step(x, u)));
}

VectorField x_plus_field(const DiscreteSystem& sys, const Eigen::VectorXd& u, int r) {
  const DiscreteSystem* sp = &sys;
  return [sp, u, r](std::span<const HyperDual> x, std::span<HyperDual> out) {
    DualVector f;
    DualMatrix A;
    dual_f_and_jac_x(*sp, x, u, f, A);
    DualVector b;
    dual_jac_u_col(*sp, x, u, r, b);
    write_dual(out, dual_solve(A, b));
  };
}

VectorField ad_pullback(const DiscreteSystem& sys, const Eigen::VectorXd& u,
                        VectorField inner) {
  const DiscreteSystem* sp = &sys;
  return [sp, u, inner = std::move(inner)](std::span<const HyperDual> x,
                                           std::span<HyperDual> out) {
    DualVector f;
    DualMatrix A;
    dual_f_and_jac_x(*sp, x, u, f, A);
    HDVec y(static_cast<std::size_t>(f.val.size()));
    write_dual(y, f);
    HDVec w(y.size());
    inner(y, w);
    DualVector wd;
    wd.val.resize(f.val.size());
    wd.dir.resize(f.val.size());
    for (Eigen::Index p = 0; p < f.val.size(); ++p) {
      wd.val(p) = w[static_cast<std::size_t>(p)].v;
      wd.dir(p) = w[static_cast<std::size_t>(p)].d1;
    }
    write_dual(out, dual_solve(A, wd));
  };
}

void field_value_jacobian(const VectorField& field, const Eigen::VectorXd& x,
                          Eigen::VectorXd& value, Eigen::MatrixXd& jacobian) {
  const Eigen::Index n = x.size();
  value.resize(n);
  jacobian.resize(n, n);
  HDVec in = lift_vector(x);
  HDVec out(static_cast<std::size_t>(n));
  for (Eigen::Index q = 0; q < n; ++q) {
    in[static_cast<std::size_t>(q)].d1 = 1.0;
    field(in, out);
    in[static_cast<std::size_t>(q)].d1 = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      jacobian(p, q) = out[static_cast<std::size_t>(p)].d1;
      if (q == 0) value(p) = out[static_cast<std::size_t>(p)].v;
    }
  }
}

Eigen::VectorXd bracket(const VectorField& V, const VectorField& W, const Eigen::VectorXd& x) {
  Eigen::VectorXd v, w;
  Eigen::MatrixXd dV, dW;
  field_value_jacobian(V, x, v, dV);
  field_value_jacobian(W, x, w, dW);
  return dW * v - dV * w;
}

HessianForm::HessianForm(int state_dim, int num_indices, std::vector<Eigen::VectorXd> upper)
    : n_(state_dim), K_(num_indices), upper_(std::move(upper)) {
  if (static_cast<int>(upper_.size()) != K_ * (K_ + 1) / 2) {
    throw DimensionMismatch("HessianForm: bad tensor size");
  }
}

const Eigen::VectorXd& HessianForm::z(int k, int l) const {
  if (k > l) std::swap(k, l);
  // packed upper triangle, row-major: (k,l) -> k*K - k(k-1)/2 + (l-k)
  const int idx = k * K_ - k * (k - 1) / 2 + (l - k);
  return upper_[static_cast<std::size_t>(idx)];
}

Eigen::VectorXd HessianForm::contract(const Eigen::VectorXd& a) const {
  return bilinear(a, a);
}

Eigen::VectorXd HessianForm::bilinear(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (int k = 0; k < K_; ++k) {
    out += a(k) * b(k) * z(k, k);
    for (int l = k + 1; l < K_; ++l) out += (a(k) * b(l) + a(l) * b(k)) * z(k, l);
  }
  return out;
}

Eigen::MatrixXd HessianForm::scalar_matrix(const Eigen::RowVectorXd& lambda) const {
  Eigen::MatrixXd G(K_, K_);
  for (int k = 0; k < K_; ++k) {
    for (int l = k; l < K_; ++l) {
      const double g = lambda * z(k, l);
      G(k, l) = g;
      G(l, k) = g;
    }
  }
  return G;
}

HessianForm HessianForm::leading(int num_indices) const {
  std::vector<Eigen::VectorXd> upper;
  upper.reserve(static_cast<std::size_t>(num_indices * (num_indices + 1) / 2));
  for (int k = 0; k < num_indices; ++k) {
    for (int l = k; l < num_indices; ++l) upper.push_back(z(k, l));
  }
  return HessianForm(n_, num_indices, std::move(upper));
}

namespace {

// d/du^r X^+_{u,s}(x) at a real point: differentiate the defining linear
// solve, A v' = b' - A' v with v = X^+_{u,s}. The u-derivatives come from
// slot-1 seeding of u_r while slot 2 walks x (for A') or seeds u_s (for b').
Eigen::VectorXd xplus_control_derivative(const DiscreteSystem& sys, const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u, int r, int s) {
  const int n = sys.n();
  HDVec xin = lift_vector(x);
  HDVec uin = lift_vector(u);
  HDVec out(static_cast<std::size_t>(n));
  uin[static_cast<std::size_t>(r)].d1 = 1.0;

  Eigen::MatrixXd A(n, n), Adu(n, n);
  for (int q = 0; q < n; ++q) {
    xin[static_cast<std::size_t>(q)].d2 = 1.0;
    sys.eval_f(xin, uin, out);
    xin[static_cast<std::size_t>(q)].d2 = 0.0;
    for (int p = 0; p < n; ++p) {
      A(p, q) = out[static_cast<std::size_t>(p)].d2;
      Adu(p, q) = out[static_cast<std::size_t>(p)].d12;
    }
  }
  Eigen::VectorXd b(n), bdu(n);
  uin[static_cast<std::size_t>(s)].d2 = 1.0;
  sys.eval_f(xin, uin, out);
  uin[static_cast<std::size_t>(s)].d2 = 0.0;
  for (int p = 0; p < n; ++p) {
    b(p) = out[static_cast<std::size_t>(p)].d2;
    bdu(p) = out[static_cast<std::size_t>(p)].d12;
  }

  const auto lu = gated_lu(A);
  const Eigen::VectorXd v = lu.solve(b);
  return lu.solve(bdu - Adu * v);
}

}  // namespace

std::vector<Eigen::VectorXd> first_variations(const DiscreteSystem& sys,
                                              const Eigen::VectorXd& x0,
                                              const ControlSequence& ubar) {
  const int N = ubar.steps();
  const int m = sys.m();
  if (N < 1) throw DimensionMismatch("first_variations: empty control sequence");

  const Trajectory traj = sys.rollout(x0, ubar);
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lus;
  lus.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) lus.push_back(gated_lu(sys.jac_x(traj.states[i], ubar.at(i))));

  std::vector<Eigen::VectorXd> Y;
  Y.reserve(static_cast<std::size_t>(N * m));
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd Ju = sys.jac_u(traj.states[static_cast<std::size_t>(i)], ubar.at(i));
    for (int r = 0; r < m; ++r) {
      Eigen::VectorXd v = lus[static_cast<std::size_t>(i)].solve(Ju.col(r));
      for (int k = i - 1; k >= 0; --k) v = lus[static_cast<std::size_t>(k)].solve(v);
      Y.push_back(std::move(v));
    }
  }
  return Y;
}

VariationData compute_variations(const DiscreteSystem& sys, const Eigen::VectorXd& x0,
                                 const ControlSequence& ubar) {
  VariationData vd;
  vd.x0 = x0;
  vd.ubar = ubar;
  vd.n = sys.n();
  vd.m = sys.m();
  vd.N = ubar.steps();
  if (vd.N < 1) throw DimensionMismatch("compute_variations: empty control sequence");

  const Trajectory traj = sys.rollout(x0, ubar);
  vd.xs = traj.states;

  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lus;
  std::vector<Eigen::MatrixXd> jacs;
  for (int i = 0; i < vd.N; ++i) {
    jacs.push_back(sys.jac_x(traj.states[static_cast<std::size_t>(i)], ubar.at(i)));
    lus.push_back(gated_lu(jacs.back()));
  }

  vd.df_ubar = Eigen::MatrixXd::Identity(vd.n, vd.n);
  for (int i = 0; i < vd.N; ++i) vd.df_ubar = jacs[static_cast<std::size_t>(i)] * vd.df_ubar;

  // First variations: X^+ at x_{i-1}, pulled back through the earlier steps.
  vd.Y.reserve(static_cast<std::size_t>(vd.N * vd.m));
  for (int i = 0; i < vd.N; ++i) {
    const Eigen::MatrixXd Ju = sys.jac_u(traj.states[static_cast<std::size_t>(i)], ubar.at(i));
    for (int r = 0; r < vd.m; ++r) {
      Eigen::VectorXd v = lus[static_cast<std::size_t>(i)].solve(Ju.col(r));
      for (int k = i - 1; k >= 0; --k) v = lus[static_cast<std::size_t>(k)].solve(v);
      vd.Y.push_back(std::move(v));
    }
  }

  auto pullback_chain = [&](Eigen::VectorXd v, int upto) {
    for (int k = upto; k >= 0; --k) v = lus[static_cast<std::size_t>(k)].solve(v);
    return v;
  };

  const int K = vd.N * vd.m;
  std::vector<Eigen::VectorXd> upper;
  upper.reserve(static_cast<std::size_t>(K * (K + 1) / 2));
  for (int k = 0; k < K; ++k) {
    const int i = k / vd.m;
    const int r = k % vd.m;
    for (int l = k; l < K; ++l) {
      const int j = l / vd.m;
      const int s = l % vd.m;
      if (i == j) {
        // Z^{ir,is} = Ad-chain d/du^r X^+_{u_i,s}; the mixed partial is
        // symmetrized, which hyper-dual d12 makes exact.
        Eigen::VectorXd w =
            xplus_control_derivative(sys, traj.states[static_cast<std::size_t>(i)], ubar.at(i), r, s);
        if (r != s) {
          w = 0.5 * (w + xplus_control_derivative(
                             sys, traj.states[static_cast<std::size_t>(i)], ubar.at(i), s, r));
        }
        upper.push_back(pullback_chain(std::move(w), i - 1));
      } else {
        // Z^{ir,js} = 1/2 Ad_{u_1..u_{i-1}} [X^+_{u_i,r}, Ad_{u_i..u_{j-1}} X^+_{u_j,s}]
        VectorField inner = x_plus_field(sys, ubar.at(j), s);
        for (int q = j - 1; q >= i; --q) inner = ad_pullback(sys, ubar.at(q), std::move(inner));
        const VectorField Vf = x_plus_field(sys, ubar.at(i), r);
        Eigen::VectorXd br =
            0.5 * bracket(Vf, inner, traj.states[static_cast<std::size_t>(i)]);
        upper.push_back(pullback_chain(std::move(br), i - 1));
      }
    }
  }
  vd.H = HessianForm(vd.n, K, std::move(upper));
  return vd;
}

}  // namespace dtctrl
