#include "selfdiff/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "selfdiff/errors.hpp"

namespace selfdiff {

ConfinementPotential ConfinementPotential::quartic_radial(double a, double b, double c) {
  if (a < 0.0) throw ValidationError("quartic potential: coefficient a must be >= 0");
  if (a == 0.0 && b <= 0.0)
    throw ValidationError("quartic potential: need a > 0 or b > 0 for confinement");
  ConfinementPotential p;
  p.quartic_ = Quartic{a, b, c};
  char buf[96];
  std::snprintf(buf, sizeof(buf), "quartic(a=%g,b=%g,c=%g)", a, b, c);
  p.name_ = buf;
  return p;
}

ConfinementPotential ConfinementPotential::custom(std::function<double(Vec2)> value,
                                                  std::function<Vec2(Vec2)> grad,
                                                  std::function<Mat2(Vec2)> hess,
                                                  std::string name) {
  if (!value || !grad || !hess)
    throw ValidationError("custom potential: all three evaluators are required");
  ConfinementPotential p;
  p.value_ = std::move(value);
  p.grad_ = std::move(grad);
  p.hess_ = std::move(hess);
  p.name_ = std::move(name);
  return p;
}

double ConfinementPotential::value(Vec2 x) const {
  if (quartic_) {
    const double r2 = x.norm2();
    return quartic_->a * r2 * r2 + quartic_->b * r2 + quartic_->c;
  }
  return value_(x);
}

Vec2 ConfinementPotential::grad(Vec2 x) const {
  if (quartic_) {
    const double r2 = x.norm2();
    return x * (4.0 * quartic_->a * r2 + 2.0 * quartic_->b);
  }
  return grad_(x);
}

Mat2 ConfinementPotential::hess(Vec2 x) const {
  if (quartic_) {
    const double r2 = x.norm2();
    const double s = 4.0 * quartic_->a * r2 + 2.0 * quartic_->b;
    const double t = 8.0 * quartic_->a;
    return {s + t * x.x * x.x, t * x.x * x.y, t * x.x * x.y, s + t * x.y * x.y};
  }
  return hess_(x);
}

InteractionPotential InteractionPotential::none() {
  InteractionPotential w;
  w.kind_ = InteractionKind::None;
  w.matrix_ = Mat2{};
  w.symmetric_ = true;
  w.name_ = "none";
  return w;
}

InteractionPotential InteractionPotential::linear_rotation(double theta) {
  InteractionPotential w;
  w.kind_ = InteractionKind::LinearRotation;
  w.matrix_ = Mat2::rotation(theta);
  w.theta_ = theta;
  // (x, Ry) = (y, R^T x): symmetric in (x,y) only when R = R^T, i.e. theta in {0, pi}.
  const double s = std::sin(theta);
  w.symmetric_ = std::abs(s) < 1e-14;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "linear_rotation(theta=%g)", theta);
  w.name_ = buf;
  return w;
}

InteractionPotential InteractionPotential::symmetric_dot() {
  InteractionPotential w;
  w.kind_ = InteractionKind::SymmetricDot;
  w.matrix_ = Mat2::identity() * -1.0;
  w.symmetric_ = true;
  w.name_ = "symmetric_dot";
  return w;
}

InteractionPotential InteractionPotential::custom(std::function<double(Vec2, Vec2)> value,
                                                  std::function<Vec2(Vec2, Vec2)> grad_x,
                                                  std::function<Mat2(Vec2, Vec2)> hess_xx,
                                                  bool symmetric, std::string name) {
  if (!value || !grad_x || !hess_xx)
    throw ValidationError("custom interaction: all three evaluators are required");
  InteractionPotential w;
  w.kind_ = InteractionKind::Custom;
  w.symmetric_ = symmetric;
  w.value_ = std::move(value);
  w.grad_x_ = std::move(grad_x);
  w.hess_xx_ = std::move(hess_xx);
  w.name_ = std::move(name);
  return w;
}

double InteractionPotential::value(Vec2 x, Vec2 y) const {
  if (kind_ == InteractionKind::Custom) return value_(x, y);
  return x.dot(matrix_.apply(y));
}

Vec2 InteractionPotential::grad_x(Vec2 x, Vec2 y) const {
  if (kind_ == InteractionKind::Custom) return grad_x_(x, y);
  return matrix_.apply(y);
}

Mat2 InteractionPotential::hess_xx(Vec2 x, Vec2 y) const {
  if (kind_ == InteractionKind::Custom) return hess_xx_(x, y);
  (void)x;
  (void)y;
  return Mat2{};
}

bool HypothesisReport::all_pass() const {
  return std::all_of(items.begin(), items.end(),
                     [](const HypothesisItem& it) { return it.pass; });
}

std::string HypothesisReport::to_text() const {
  std::ostringstream os;
  os << "hypothesis check (gauge lambda = " << gauge_lambda << ")\n";
  for (const auto& it : items) {
    os << "  (" << it.id << ") " << (it.pass ? "PASS" : "FAIL") << "  "
       << it.description << "  worst = " << it.worst_value;
    if (!it.detail.empty()) os << "  [" << it.detail << "]";
    os << "\n";
  }
  os << "  fitted: K = " << convexity_K << ", delta = " << growth_delta
     << ", kappa = " << kappa << ", alpha = " << curvature_alpha
     << ", M = " << hessian_M << "\n";
  return os.str();
}

HypothesisReport check_hypotheses(const ConfinementPotential& V,
                                  const InteractionPotential& W,
                                  double box, int n, double tol,
                                  double gauge_lambda) {
  if (n < 10) throw ValidationError("check_hypotheses: n must be at least 10 per axis");
  if (!(box > 0.0)) throw ValidationError("check_hypotheses: box must be positive");
  const double lam = gauge_lambda;
  if (lam < 0.0) throw ValidationError("check_hypotheses: gauge_lambda must be >= 0");

  // Gauge-transformed pair; the x-gradient of the total drift V + W*mu is
  // unchanged up to the constant (integral over y) term.
  auto Veff = [&](Vec2 x) { return V.value(x) - 0.5 * lam * x.norm2(); };
  auto gradVeff = [&](Vec2 x) { return V.grad(x) - x * lam; };
  auto hessVeff = [&](Vec2 x) { return V.hess(x) + Mat2::identity() * (-lam); };
  auto Weff = [&](Vec2 x, Vec2 y) {
    double w = W.value(x, y);
    if (lam > 0.0) w += 0.5 * lam * x.norm2() + 0.5 * y.norm2() / lam;
    return w;
  };
  auto gradWeff = [&](Vec2 x, Vec2 y) {
    Vec2 g = W.grad_x(x, y);
    if (lam > 0.0) g += x * lam;
    return g;
  };
  auto hessWeff = [&](Vec2 x, Vec2 y) {
    Mat2 h = W.hess_xx(x, y);
    if (lam > 0.0) h = h + Mat2::identity() * lam;
    return h;
  };

  std::vector<Vec2> samples;
  samples.reserve(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      samples.push_back({-box + 2.0 * box * i / (n - 1), -box + 2.0 * box * j / (n - 1)});

  HypothesisReport rep;
  rep.gauge_lambda = lam;

  // (i) positivity: V >= 1 and W >= 0 on the sample set.
  double minV = std::numeric_limits<double>::infinity();
  for (auto x : samples) minV = std::min(minV, Veff(x));
  double minW = std::numeric_limits<double>::infinity();
  for (auto x : samples)
    for (auto y : samples) minW = std::min(minW, Weff(x, y));
  {
    HypothesisItem it;
    it.id = "i";
    it.description = "positivity: min V and min W over the box";
    it.pass = (minV >= 1.0 - tol) && (minW >= -tol);
    it.worst_value = std::min(minV - 1.0, minW);
    char buf[72];
    std::snprintf(buf, sizeof(buf), "min V = %.6g, min W = %.6g", minV, minW);
    it.detail = buf;
    rep.items.push_back(it);
  }

  // (ii) strict uniform convexity of V.
  double minEig = std::numeric_limits<double>::infinity();
  for (auto x : samples) minEig = std::min(minEig, hessVeff(x).min_eig_sym());
  rep.convexity_K = minEig;
  {
    HypothesisItem it;
    it.id = "ii";
    it.description = "convexity: min eigenvalue of Hess V";
    it.pass = minEig > tol;
    it.worst_value = minEig;
    rep.items.push_back(it);
  }

  // (iii) growth: (grad V, x) >= c|x|^(2 delta) with delta > 1, fitted on the
  // outer-radius samples; plus the Lipschitz-type bound with fitted C.
  {
    const double rmax = box * std::sqrt(2.0);
    std::vector<std::pair<double, double>> pts;  // (log|x|, log(gradV.x))
    for (auto x : samples) {
      const double r = x.norm();
      if (r < 0.7 * rmax) continue;
      const double g = gradVeff(x).dot(x);
      if (g > 0.0) pts.emplace_back(std::log(r), std::log(g));
    }
    double delta_fit = 0.0, c_fit = 0.0;
    if (pts.size() >= 2) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (auto [u, w] : pts) { sx += u; sy += w; sxx += u * u; sxy += u * w; }
      const double m = static_cast<double>(pts.size());
      const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      delta_fit = 0.5 * slope;
      c_fit = std::numeric_limits<double>::infinity();
      for (auto [u, w] : pts) c_fit = std::min(c_fit, std::exp(w - slope * u));
    }
    rep.growth_delta = delta_fit;

    double worstC = 0.0;  // |grad V(x)-grad V(y)| / ((|x-y| ^ 1)(V(x)+V(y)))
    const size_t stride = std::max<size_t>(1, samples.size() / 160);
    for (size_t i = 0; i < samples.size(); i += stride)
      for (size_t j = 0; j < samples.size(); j += stride) {
        if (i == j) continue;
        const Vec2 x = samples[i], y = samples[j];
        const double num = (gradVeff(x) - gradVeff(y)).norm();
        const double den = std::min((x - y).norm(), 1.0) * (Veff(x) + Veff(y));
        if (den > 0.0) worstC = std::max(worstC, num / den);
      }
    HypothesisItem it;
    it.id = "iii";
    it.description = "growth: fitted delta in (grad V, x) >= c|x|^(2 delta)";
    it.pass = delta_fit > 1.05 && c_fit > 0.0 && std::isfinite(worstC);
    it.worst_value = delta_fit;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "c = %.4g, lipschitz C = %.4g", c_fit, worstC);
    it.detail = buf;
    rep.items.push_back(it);
  }

  // (iv) domination: fitted kappa over sample pairs.
  {
    double kap = 0.0;
    bool finite = true;
    for (auto x : samples)
      for (auto y : samples) {
        const double num = std::abs(Weff(x, y)) + gradWeff(x, y).norm() + hessWeff(x, y).frob();
        const double den = Veff(x) + Veff(y);
        if (!(den > 0.0)) { finite = false; continue; }
        kap = std::max(kap, num / den);
      }
    rep.kappa = std::max(kap, 1.0);
    HypothesisItem it;
    it.id = "iv";
    it.description = "domination: fitted kappa = max (W+|grad W|+|Hess W|)/(V(x)+V(y))";
    it.pass = finite && std::isfinite(kap);
    it.worst_value = kap;
    rep.items.push_back(it);
  }

  // (v) curvature: boundary estimate of the drift ratio (must exceed -1) and
  // the Hessian lower bound M (exists for any finite sample; reported).
  {
    const double rmax = box * std::sqrt(2.0);
    double worstRatio = std::numeric_limits<double>::infinity();
    double minM = std::numeric_limits<double>::infinity();
    for (auto x : samples) {
      const double r = x.norm();
      for (auto y : samples) {
        minM = std::min(minM, (hessVeff(x) + hessWeff(x, y)).min_eig_sym());
        if (r < 0.9 * rmax) continue;
        const double den = gradVeff(x).dot(x);
        if (std::abs(den) < 1e-12) continue;
        worstRatio = std::min(worstRatio, gradWeff(x, y).dot(x) / den);
      }
    }
    rep.curvature_alpha = worstRatio;
    rep.hessian_M = minM;
    HypothesisItem it;
    it.id = "v";
    it.description = "curvature: boundary ratio (x,grad_x W)/(x,grad V) > -1 and Hessian bound M";
    it.pass = worstRatio > -1.0 && std::isfinite(minM);
    it.worst_value = worstRatio;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "M = %.6g", minM);
    it.detail = buf;
    rep.items.push_back(it);
  }

  return rep;
}

double auto_rho_max(const ConfinementPotential& V) {
  // Locate min V on a coarse radial scan, then the first rho with
  // 2(V - Vmin) >= 80.
  double vmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 800; ++i) vmin = std::min(vmin, V.radial(8.0 * i / 800));
  double rho = 8.0;
  for (int i = 0; i <= 1600; ++i) {
    const double r = 8.0 * i / 1600;
    if (2.0 * (V.radial(r) - vmin) >= 80.0) { rho = r; break; }
  }
  rho = 0.5 * std::ceil(rho / 0.5);
  return std::clamp(rho, 2.0, 8.0);
}

}  // namespace selfdiff
