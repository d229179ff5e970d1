#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace pass::detail {

/// Concave scalar function of the stacked received powers q (q[k*K + i] = h_k^H W_i h_k):
///   g(q) = sum_r ln(a_r . q + b_r) + c . q + d
struct LogAffine {
  std::vector<std::pair<Eigen::VectorXd, double>> logs;
  Eigen::VectorXd linear;
  double constant = 0.0;

  double value(const Eigen::VectorXd& q) const {
    double v = linear.dot(q) + constant;
    for (const auto& [a, b] : logs) v += std::log(a.dot(q) + b);
    return v;
  }
};

struct BarrierOptions {
  double relative_gap = 1e-10;
  double phase1_margin = 1e-3;   // phase I stops once every constraint has this much slack
  double phase1_accept = 1e-10;  // smallest slack still called strictly feasible
  double mu = 20.0;
  int max_outer = 60;
  int max_newton = 120;
};

struct BarrierResult {
  enum class Outcome { Converged, Infeasible, Stalled };
  Outcome outcome = Outcome::Stalled;
  Eigen::VectorXd z;           // solution (or phase I best point when infeasible)
  double objective = 0.0;      // sum of traces, normalized units
  double gap = 0.0;            // nu / t, normalized units
  double phase1_level = 0.0;   // smallest tau reached; negative means strictly feasible
  std::vector<double> values;  // g_j(q) at z
  double power_slack = 0.0;
  int newton_steps = 0;
};

/// Log-barrier interior point method for
///
///   min  sum_k Tr(W_k)
///   s.t. g_j(q(W)) >= 0,  sum_k Tr(W_k) <= cap,  W_k PSD (M x M Hermitian),
///
/// with every g_j a LogAffine of the received powers. Hermitian blocks are
/// parametrized by M diagonal reals followed by (re, im) of each upper
/// off-diagonal entry. A phase I problem (min tau s.t. g_j + tau >= 0)
/// supplies the strictly feasible start.
class HermitianBarrier {
 public:
  /// Rows of h are the (normalized) user channels; one PSD block per user.
  HermitianBarrier(const Eigen::MatrixXcd& h, double cap)
      : users_(static_cast<int>(h.rows())), dim_(static_cast<int>(h.cols())), cap_(cap) {
    const int per = dim_ * dim_;
    n_ = users_ * per;
    trace_ = Eigen::VectorXd::Zero(n_);
    q_map_ = Eigen::MatrixXd::Zero(users_ * users_, n_);
    for (int i = 0; i < users_; ++i) {
      const int off = i * per;
      for (int a = 0; a < dim_; ++a) trace_(off + a) = 1.0;
      for (int k = 0; k < users_; ++k) {
        const Eigen::VectorXcd hk = h.row(k).transpose();
        auto row = q_map_.row(k * users_ + i);
        for (int a = 0; a < dim_; ++a) row(off + a) = std::norm(hk(a));
        int p = off + dim_;
        for (int a = 0; a < dim_; ++a)
          for (int b = a + 1; b < dim_; ++b) {
            const std::complex<double> c = std::conj(hk(a)) * hk(b);
            row(p++) = 2.0 * c.real();
            row(p++) = -2.0 * c.imag();
          }
      }
    }
  }

  int variables() const { return n_; }
  int users() const { return users_; }
  int dim() const { return dim_; }

  void add_constraint(LogAffine g) { constraints_.push_back(std::move(g)); }

  Eigen::MatrixXcd block(const Eigen::VectorXd& z, int i) const {
    Eigen::MatrixXcd w(dim_, dim_);
    const int off = i * dim_ * dim_;
    for (int a = 0; a < dim_; ++a) w(a, a) = z(off + a);
    int p = off + dim_;
    for (int a = 0; a < dim_; ++a)
      for (int b = a + 1; b < dim_; ++b) {
        w(a, b) = {z(p), z(p + 1)};
        w(b, a) = std::conj(w(a, b));
        p += 2;
      }
    return w;
  }

  Eigen::VectorXd pack(const std::vector<Eigen::MatrixXcd>& blocks) const {
    Eigen::VectorXd z(n_);
    for (int i = 0; i < users_; ++i) {
      const auto& w = blocks[static_cast<std::size_t>(i)];
      const int off = i * dim_ * dim_;
      for (int a = 0; a < dim_; ++a) z(off + a) = w(a, a).real();
      int p = off + dim_;
      for (int a = 0; a < dim_; ++a)
        for (int b = a + 1; b < dim_; ++b) {
          const std::complex<double> avg = 0.5 * (w(a, b) + std::conj(w(b, a)));
          z(p++) = avg.real();
          z(p++) = avg.imag();
        }
    }
    return z;
  }

  Eigen::VectorXd received(const Eigen::VectorXd& z) const { return q_map_ * z; }
  double trace(const Eigen::VectorXd& z) const { return trace_.dot(z); }

  BarrierResult solve(const BarrierOptions& opt = {}) const {
    BarrierResult res;
    // Phase I from a scaled identity at half the power budget.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_ + 1);
    const double diag = 0.5 * cap_ / (users_ * dim_);
    for (int i = 0; i < users_; ++i)
      for (int a = 0; a < dim_; ++a) v(i * dim_ * dim_ + a) = diag;
    {
      const Eigen::VectorXd q = received(v.head(n_));
      double worst = 0.0;
      for (const auto& g : constraints_) worst = std::max(worst, -g.value(q));
      v(n_) = worst + 1.0;
    }

    if (!constraints_.empty()) {
      double t = 1.0;
      bool feasible = false;
      for (int outer = 0; outer < opt.max_outer && !feasible; ++outer) {
        center(v, t, true, opt, res.newton_steps, opt.phase1_margin);
        feasible = v(n_) < -opt.phase1_margin;
        // v(n_) - nu/t lower-bounds the phase I optimum.
        if (v(n_) - nu(true) / t > opt.phase1_accept || nu(true) / t < 1e-13) break;
        t *= opt.mu;
      }
      res.phase1_level = v(n_);
      if (!(v(n_) < -opt.phase1_accept)) {
        res.outcome = BarrierResult::Outcome::Infeasible;
        fill(res, v.head(n_));
        return res;
      }
    }

    Eigen::VectorXd z = v.head(n_);
    double t = nu(false) / std::max(trace(z), 1e-300);
    for (int outer = 0; outer < opt.max_outer; ++outer) {
      const bool ok = center(z, t, false, opt, res.newton_steps, 0.0);
      const double obj = trace(z);
      if (nu(false) / t <= opt.relative_gap * obj) {
        res.outcome = BarrierResult::Outcome::Converged;
        break;
      }
      if (!ok && outer > 0 && nu(false) / t <= 1e-7 * obj) {
        // Newton stalled near the boundary; accept the certificate reached so far.
        res.outcome = BarrierResult::Outcome::Converged;
        break;
      }
      t *= opt.mu;
    }
    res.gap = nu(false) / t;
    fill(res, z);
    return res;
  }

 private:
  double nu(bool /*phase1*/) const {
    return static_cast<double>(users_ * dim_) + static_cast<double>(constraints_.size()) + 1.0;
  }

  void fill(BarrierResult& res, const Eigen::VectorXd& z) const {
    res.z = z;
    res.objective = trace(z);
    res.power_slack = cap_ - res.objective;
    const Eigen::VectorXd q = received(z);
    res.values.clear();
    for (const auto& g : constraints_) res.values.push_back(g.value(q));
  }

  // Basis matrix trace Tr(Y B_l) for Hermitian Y, written into out at offset.
  void trace_with_basis(const Eigen::MatrixXcd& y, Eigen::Ref<Eigen::VectorXd> out) const {
    for (int a = 0; a < dim_; ++a) out(a) = y(a, a).real();
    int p = dim_;
    for (int a = 0; a < dim_; ++a)
      for (int b = a + 1; b < dim_; ++b) {
        out(p++) = 2.0 * y(a, b).real();
        out(p++) = 2.0 * y(a, b).imag();
      }
  }

  struct Eval {
    double value;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
  };

  // Barrier value (and optionally derivatives). Returns nullopt outside the domain.
  std::optional<Eval> evaluate(const Eigen::VectorXd& v, double t, bool phase1,
                               bool derivs) const {
    const int nv = phase1 ? n_ + 1 : n_;
    const int per = dim_ * dim_;
    const Eigen::VectorXd z = v.head(n_);
    const double tau = phase1 ? v(n_) : 0.0;

    const double tr = trace(z);
    const double slack = cap_ - tr;
    if (!(slack > 0.0)) return std::nullopt;

    Eval e;
    e.value = (phase1 ? t * tau : t * tr) - std::log(slack);
    if (derivs) {
      e.grad = Eigen::VectorXd::Zero(nv);
      e.hess = Eigen::MatrixXd::Zero(nv, nv);
      if (!phase1) e.grad.head(n_) += t * trace_;
      else e.grad(n_) += t;
      e.grad.head(n_) += trace_ / slack;
      e.hess.topLeftCorner(n_, n_) += trace_ * trace_.transpose() / (slack * slack);
    }

    for (int i = 0; i < users_; ++i) {
      const Eigen::MatrixXcd w = block(z, i);
      Eigen::LLT<Eigen::MatrixXcd> llt(w);
      if (llt.info() != Eigen::Success) return std::nullopt;
      const auto& l = llt.matrixL();
      double logdet = 0.0;
      for (int a = 0; a < dim_; ++a) {
        const double d = l(a, a).real();
        if (!(d > 0.0)) return std::nullopt;
        logdet += 2.0 * std::log(d);
      }
      e.value -= logdet;
      if (!derivs) continue;
      const Eigen::MatrixXcd x = llt.solve(Eigen::MatrixXcd::Identity(dim_, dim_));
      const int off = i * per;
      Eigen::VectorXd g(per);
      trace_with_basis(x, g);
      e.grad.segment(off, per) -= g;
      Eigen::VectorXd col(per);
      for (int a = 0; a < dim_; ++a) {
        trace_with_basis(x.col(a) * x.row(a), col);
        e.hess.block(off, off + a, per, 1) += col;
      }
      int p = dim_;
      for (int a = 0; a < dim_; ++a)
        for (int b = a + 1; b < dim_; ++b) {
          const Eigen::MatrixXcd ab = x.col(a) * x.row(b);
          const Eigen::MatrixXcd ba = x.col(b) * x.row(a);
          trace_with_basis(ab + ba, col);
          e.hess.block(off, off + p, per, 1) += col;
          trace_with_basis(std::complex<double>(0.0, 1.0) * (ab - ba), col);
          e.hess.block(off, off + p + 1, per, 1) += col;
          p += 2;
        }
    }

    if (!constraints_.empty()) {
      const Eigen::VectorXd q = received(z);
      const int nq = users_ * users_;
      Eigen::VectorXd gq(nq);
      Eigen::MatrixXd hq(nq, nq);
      for (const auto& c : constraints_) {
        double val = c.linear.dot(q) + c.constant + tau;
        if (derivs) {
          gq = c.linear;
          hq.setZero();
        }
        for (const auto& [a, b] : c.logs) {
          const double arg = a.dot(q) + b;
          if (!(arg > 0.0)) return std::nullopt;
          val += std::log(arg);
          if (derivs) {
            gq += a / arg;
            hq -= a * a.transpose() / (arg * arg);
          }
        }
        if (!(val > 0.0)) return std::nullopt;
        e.value -= std::log(val);
        if (!derivs) continue;
        // -log(g): grad = -g'/g, hess = g' g'^T / g^2 - g''/g  (in q, then mapped to z)
        const Eigen::VectorXd gz = q_map_.transpose() * gq;
        e.grad.head(n_) -= gz / val;
        e.hess.topLeftCorner(n_, n_) += gz * gz.transpose() / (val * val) -
                                        q_map_.transpose() * hq * q_map_ / val;
        if (phase1) {
          e.grad(n_) -= 1.0 / val;
          e.hess(n_, n_) += 1.0 / (val * val);
          e.hess.block(0, n_, n_, 1) += gz / (val * val);
          e.hess.block(n_, 0, 1, n_) += gz.transpose() / (val * val);
        }
      }
    }
    return e;
  }

  // Damped Newton centering. Returns false if the step stalled before the
  // decrement test passed. In phase I, exits early once tau < -stop_tau.
  bool center(Eigen::VectorXd& v, double t, bool phase1, const BarrierOptions& opt, int& steps,
              double stop_tau) const {
    const int nv = phase1 ? n_ + 1 : n_;
    for (int it = 0; it < opt.max_newton; ++it) {
      auto e = evaluate(v, t, phase1, true);
      if (!e) return false;
      Eigen::MatrixXd h = e->hess;
      Eigen::LLT<Eigen::MatrixXd> llt(h);
      double reg = 1e-14 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
      while (llt.info() != Eigen::Success && reg < 1e10) {
        h = e->hess + reg * Eigen::MatrixXd::Identity(nv, nv);
        llt.compute(h);
        reg *= 100.0;
      }
      if (llt.info() != Eigen::Success) return false;
      const Eigen::VectorXd step = -llt.solve(e->grad);
      const double decrement = -e->grad.dot(step);
      ++steps;
      if (decrement / 2.0 <= 1e-11) return true;
      double s = 1.0;
      std::optional<Eval> trial;
      for (int ls = 0; ls < 80; ++ls, s *= 0.5) {
        trial = evaluate(v + s * step, t, phase1, false);
        if (trial && trial->value <= e->value - 0.25 * s * decrement) break;
        trial.reset();
      }
      if (!trial) return false;
      v += s * step;
      if (phase1 && v(n_) < -stop_tau) return true;
    }
    return true;
  }

  int users_;
  int dim_;
  int n_;
  double cap_;
  Eigen::VectorXd trace_;
  Eigen::MatrixXd q_map_;
  std::vector<LogAffine> constraints_;
};

}  // namespace pass::detail
