#include "npot/solver.hpp"
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace npot {

namespace {

std::string uname(int c) { return "u" + std::to_string(c); }

std::string dname(int c, const MultiIndex& beta) {
  std::string s = "d" + std::to_string(c) + "_";
  for (int i = 0; i < beta.dim(); ++i) s += static_cast<char>('0' + beta[i]);
  return s;
}

/// name -> (kind, component, beta); relies on the table used at parse time.
bool parse_varname(const std::string& name, int n, char& kind, int& comp,
                   MultiIndex& beta) {
  if (name.empty()) return false;
  kind = name[0];
  if (kind == 'x' || kind == 'u') {
    comp = std::stoi(name.substr(1));
    return true;
  }
  if (kind == 'd') {
    auto us = name.find('_');
    comp = std::stoi(name.substr(1, us - 1));
    std::vector<int> b(n);
    for (int i = 0; i < n; ++i) b[i] = name[us + 1 + i] - '0';
    beta = MultiIndex(std::move(b));
    return true;
  }
  return false;
}

}  // namespace

SystemSpec SystemSpec::make(int n, int m, int components, double alpha,
                            std::vector<std::string> rhs, bool autonomous) {
  if (n < 3) throw std::invalid_argument("SystemSpec: n >= 3");
  if (m < 1) throw std::invalid_argument("SystemSpec: m >= 1");
  if (static_cast<int>(rhs.size()) != components)
    throw std::invalid_argument("SystemSpec: need one rhs per component");
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("SystemSpec: alpha in (0,1)");
  SystemSpec sys;
  sys.n = n;
  sys.m = m;
  sys.components = components;
  sys.alpha = alpha;
  sys.rhs_src = std::move(rhs);
  sys.autonomous = autonomous;
  dsl::SymbolTable table = sys.table();
  bool any_x = false;
  for (const auto& src : sys.rhs_src) {
    sys.rhs.push_back(dsl::parse(src, table));
    sys.dependence = std::max(sys.dependence, dsl::dependence_order(sys.rhs.back()));
    any_x = any_x || dsl::references_x(sys.rhs.back());
  }
  if (autonomous && any_x)
    throw std::invalid_argument("SystemSpec: autonomous rhs references x");
  return sys;
}

std::vector<std::pair<int, MultiIndex>> SystemSpec::referenced_derivatives() const {
  std::vector<std::pair<int, MultiIndex>> out;
  for (const auto& e : rhs) {
    for (const auto& name : dsl::variables(e)) {
      char kind;
      int comp;
      MultiIndex beta;
      if (parse_varname(name, n, kind, comp, beta) && kind == 'd') {
        auto key = std::make_pair(comp, beta);
        if (std::find(out.begin(), out.end(), key) == out.end())
          out.push_back(key);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid3

Grid3::Grid3(double R, int npts) : R_(R), npts_(npts) {
  if (npts < 4) throw std::invalid_argument("Grid3: need at least 4 nodes per axis");
  h_ = 2.0 * R / (npts - 1);
  vals_.assign(static_cast<std::size_t>(npts) * npts * npts, 0.0);
}

Vec Grid3::node(int i, int j, int k) const {
  return {-R_ + i * h_, -R_ + j * h_, -R_ + k * h_};
}

namespace {

// Uniform cubic B-spline segment basis on t in [0,1] and its t-derivatives.
void bspline4(double t, int deriv, double w[4]) {
  static const double c[4][4] = {
      // constant, t, t^2, t^3 (all over 6)
      {1.0, -3.0, 3.0, -1.0},
      {4.0, 0.0, -6.0, 3.0},
      {1.0, 3.0, 3.0, -3.0},
      {0.0, 0.0, 0.0, 1.0}};
  for (int j = 0; j < 4; ++j) {
    double v = 0.0;
    for (int p = 3; p >= deriv; --p) {
      double coef = c[j][p];
      for (int q = 0; q < deriv; ++q) coef *= (p - q);
      v = v * t + coef;
    }
    w[j] = v / 6.0;
  }
}

// LU of the 1-D interpolation system (interior rows c_j + 4c_{j+1} + c_{j+2}
// = 6 f_j, not-a-knot rows at both ends), cached per node count.
const Eigen::PartialPivLU<Eigen::MatrixXd>& spline_lu(int np) {
  static std::mutex mu;
  static std::map<int, Eigen::PartialPivLU<Eigen::MatrixXd>*> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(np);
  if (it == cache.end()) {
    int nc = np + 2;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nc, nc);
    M(0, 0) = 1;  M(0, 1) = -4;  M(0, 2) = 6;  M(0, 3) = -4;  M(0, 4) = 1;
    for (int j = 0; j < np; ++j) {
      M(j + 1, j) = 1.0;
      M(j + 1, j + 1) = 4.0;
      M(j + 1, j + 2) = 1.0;
    }
    M(nc - 1, nc - 1) = 1;  M(nc - 1, nc - 2) = -4;  M(nc - 1, nc - 3) = 6;
    M(nc - 1, nc - 4) = -4;  M(nc - 1, nc - 5) = 1;
    it = cache.emplace(np, new Eigen::PartialPivLU<Eigen::MatrixXd>(M)).first;
  }
  return *it->second;
}

}  // namespace

void Grid3::refresh() const {
  int np = npts_, nc = np + 2;
  const auto& lu = spline_lu(np);

  auto solve_axis = [&](const std::vector<double>& in, int d0, int d1, int len,
                        std::vector<double>& out) {
    // in: [d0][d1][len], out: [d0][d1][len+2]; spline solve along the last axis
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(len + 2, d0 * d1);
    for (int a = 0; a < d0; ++a)
      for (int b = 0; b < d1; ++b)
        for (int k = 0; k < len; ++k)
          rhs(k + 1, a * d1 + b) = 6.0 * in[(a * static_cast<std::size_t>(d1) + b) * len + k];
    Eigen::MatrixXd sol = lu.solve(rhs);
    out.resize(static_cast<std::size_t>(d0) * d1 * (len + 2));
    for (int a = 0; a < d0; ++a)
      for (int b = 0; b < d1; ++b)
        for (int k = 0; k < len + 2; ++k)
          out[(a * static_cast<std::size_t>(d1) + b) * (len + 2) + k] = sol(k, a * d1 + b);
  };

  std::vector<double> s1, s2;
  solve_axis(vals_, np, np, np, s1);       // z controls: [np][np][nc]
  // transpose to put y last: [np][nc][np]
  std::vector<double> t1(static_cast<std::size_t>(np) * nc * np);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j)
      for (int k = 0; k < nc; ++k)
        t1[(i * static_cast<std::size_t>(nc) + k) * np + j] = s1[(i * static_cast<std::size_t>(np) + j) * nc + k];
  solve_axis(t1, np, nc, np, s2);          // y controls: [np][nc][nc]
  // transpose to put x last: [nc][nc][np]
  std::vector<double> t2(static_cast<std::size_t>(nc) * nc * np);
  for (int i = 0; i < np; ++i)
    for (int k = 0; k < nc; ++k)
      for (int j = 0; j < nc; ++j)
        t2[(k * static_cast<std::size_t>(nc) + j) * np + i] = s2[(i * static_cast<std::size_t>(nc) + k) * nc + j];
  solve_axis(t2, nc, nc, np, s1);          // x controls: [nc(z)][nc(y)][nc(x)]
  // back to x-major [nc(x)][nc(y)][nc(z)]
  ctrl_.resize(static_cast<std::size_t>(nc) * nc * nc);
  for (int k = 0; k < nc; ++k)
    for (int j = 0; j < nc; ++j)
      for (int i = 0; i < nc; ++i)
        ctrl_[(i * static_cast<std::size_t>(nc) + j) * nc + k] = s1[(k * static_cast<std::size_t>(nc) + j) * nc + i];
  dirty_ = false;
}

double Grid3::interp(const Vec& x) const {
  if (dirty_) refresh();
  int nc = npts_ + 2;
  int ib[3];
  double w[3][4];
  for (int a = 0; a < 3; ++a) {
    double s = (x[a] + R_) / h_;
    int cell = std::clamp(static_cast<int>(std::floor(s)), 0, npts_ - 2);
    ib[a] = cell;
    bspline4(s - cell, 0, w[a]);
  }
  double sum = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double wij = w[0][i] * w[1][j];
      const double* row = &ctrl_[((ib[0] + i) * static_cast<std::size_t>(nc) + (ib[1] + j)) * nc + ib[2]];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += w[2][k] * row[k];
      sum += wij * acc;
    }
  return sum;
}

Jet Grid3::jet(const Vec& x, int order) const {
  if (order > 2)
    throw std::invalid_argument("Grid3::jet supports order <= 2");
  if (dirty_) refresh();
  int nc = npts_ + 2;
  int ib[3];
  double w[3][3][4];  // axis, derivative order, node
  for (int a = 0; a < 3; ++a) {
    double s = (x[a] + R_) / h_;
    int cell = std::clamp(static_cast<int>(std::floor(s)), 0, npts_ - 2);
    ib[a] = cell;
    for (int d = 0; d <= order; ++d) bspline4(s - cell, d, w[a][d]);
  }
  Jet J;
  J.base = x;
  J.order = order;
  for (int total = 0; total <= order; ++total) {
    for (const auto& mu : indices_of_order(3, total)) {
      double sum = 0.0;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          double wij = w[0][mu[0]][i] * w[1][mu[1]][j];
          const double* row = &ctrl_[((ib[0] + i) * static_cast<std::size_t>(nc) + (ib[1] + j)) * nc + ib[2]];
          double acc = 0.0;
          for (int k = 0; k < 4; ++k) acc += w[2][mu[2]][k] * row[k];
          sum += wij * acc;
        }
      double d = sum / std::pow(h_, total);
      if (d != 0.0) J.coeffs[mu] = d / static_cast<double>(mu.factorial());
    }
  }
  return J;
}

namespace {

ScalarField grid_scalar_field(const Grid3& g) {
  ScalarField f;
  f.n = 3;
  f.R = g.R();
  // the grid outlives the field in every solver path; capture by value
  Grid3 copy = g;
  f.eval = [copy](const Vec& x) { return copy.interp(x); };
  f.jet = [copy](const Vec& x, int order) { return copy.jet(x, order); };
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// GridField

GridField GridField::zero(const SystemSpec& sys, const SolveConfig& cfg) {
  GridField f;
  f.n = sys.n;
  f.R = cfg.R;
  for (int c = 0; c < sys.components; ++c) f.comp.emplace_back(cfg.R, cfg.grid_points);
  for (const auto& key : sys.referenced_derivatives())
    f.deriv.emplace(key, Grid3(cfg.R, cfg.grid_points));
  return f;
}

ScalarField GridField::field(int c) const { return grid_scalar_field(comp[c]); }

double GridField::sup_diff(const GridField& o) const {
  double d = 0.0;
  for (std::size_t c = 0; c < comp.size(); ++c) {
    const Grid3& a = comp[c];
    const Grid3& b = o.comp[c];
    for (int i = 0; i < a.npts(); ++i)
      for (int j = 0; j < a.npts(); ++j)
        for (int k = 0; k < a.npts(); ++k)
          d = std::max(d, std::abs(a.at(i, j, k) - b.at(i, j, k)));
  }
  return d;
}

// ---------------------------------------------------------------------------
// iteration internals

namespace {

std::vector<Grid3> sample_rhs(const GridField& f, const SystemSpec& sys,
                              const SolveConfig& cfg) {
  int np = cfg.grid_points;
  std::vector<Grid3> G(sys.components, Grid3(cfg.R, np));
  auto refs = sys.referenced_derivatives();
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j)
      for (int k = 0; k < np; ++k) {
        Vec x = G[0].node(i, j, k);
        dsl::Bindings b;
        for (int a = 0; a < sys.n; ++a) b["x" + std::to_string(a + 1)] = x[a];
        for (int c = 0; c < sys.components; ++c)
          b[uname(c + 1)] = f.comp[c].at(i, j, k);
        for (const auto& key : refs)
          b[dname(key.first, key.second)] = f.deriv.at(key).at(i, j, k);
        for (int c = 0; c < sys.components; ++c)
          G[c].at(i, j, k) = dsl::eval(sys.rhs[c], b);
      }
  return G;
}

Grid3 apply_newtonian(const Grid3& g, const SolveConfig& cfg) {
  ScalarField f = grid_scalar_field(g);
  int np = cfg.grid_points;
  Grid3 out(cfg.R, np);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j)
      for (int k = 0; k < np; ++k)
        out.at(i, j, k) = newtonian(f, out.node(i, j, k), cfg.level);
  return out;
}

struct ThetaData {
  GridField out;
  std::vector<Grid3> top_in;       // field under the final N application
  std::vector<Polynomial> trunc;   // removed jet polynomial per component
};

ThetaData theta_impl(const GridField& f, const SystemSpec& sys,
                     const SolveConfig& cfg) {
  std::vector<Grid3> chain = sample_rhs(f, sys, cfg);
  for (int l = 1; l < sys.m; ++l)
    for (int c = 0; c < sys.components; ++c) chain[c] = apply_newtonian(chain[c], cfg);

  ThetaData td{GridField::zero(sys, cfg), chain, {}};
  int np = cfg.grid_points;
  int twom = 2 * sys.m;

  // jet truncation indices: everything of order < 2m, plus Lambda
  std::vector<MultiIndex> cut;
  for (int d = 0; d < twom; ++d)
    for (const auto& b : indices_of_order(sys.n, d)) cut.push_back(b);
  for (const auto& b : lambda_set(sys.n, sys.m)) cut.push_back(b);

  Vec origin(sys.n, 0.0);
  auto refs = sys.referenced_derivatives();
  for (int c = 0; c < sys.components; ++c) {
    ScalarField inner = grid_scalar_field(chain[c]);
    Grid3 W = apply_newtonian(chain[c], cfg);

    Polynomial P(sys.n);
    for (const auto& beta : cut) {
      double d = d_beta_newtonian(beta, inner, origin, cfg.level + 2);
      double coef = d / static_cast<double>(beta.factorial());
      if (std::abs(coef) > 1e-300) P.add_term(beta, coef);
    }
    td.trunc.push_back(P);

    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j)
        for (int k = 0; k < np; ++k) {
          Vec x = W.node(i, j, k);
          td.out.comp[c].at(i, j, k) = W.at(i, j, k) - P.eval(x);
        }

    for (const auto& key : refs) {
      if (key.first != c + 1) continue;
      Grid3& D = td.out.deriv.at(key);
      Polynomial dP = P.derivative(key.second);
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j)
          for (int k = 0; k < np; ++k) {
            Vec x = D.node(i, j, k);
            D.at(i, j, k) =
                d_beta_newtonian(key.second, inner, x, cfg.level) - dP.eval(x);
          }
    }
  }
  return td;
}

void add_polynomials(GridField& f, const std::vector<Polynomial>& p,
                     const SystemSpec& sys) {
  int np = f.comp[0].npts();
  for (int c = 0; c < static_cast<int>(f.comp.size()); ++c) {
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j)
        for (int k = 0; k < np; ++k)
          f.comp[c].at(i, j, k) += p[c].eval(f.comp[c].node(i, j, k));
  }
  for (auto& [key, grid] : f.deriv) {
    Polynomial dp = p[key.first - 1].derivative(key.second);
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j)
        for (int k = 0; k < np; ++k)
          grid.at(i, j, k) += dp.eval(grid.node(i, j, k));
  }
}

double fd_laplacian_pow(const std::function<double(const Vec&)>& u, const Vec& x,
                        int m, double h) {
  if (m == 0) return u(x);
  double s = -6.0 * fd_laplacian_pow(u, x, m - 1, h);
  for (int a = 0; a < 3; ++a) {
    Vec xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    s += fd_laplacian_pow(u, xp, m - 1, h) + fd_laplacian_pow(u, xm, m - 1, h);
  }
  return s / (h * h);
}

}  // namespace

GridField omega(int l, const GridField& f, const SystemSpec& sys,
                const SolveConfig& cfg) {
  if (l < 1 || l > sys.m) throw std::invalid_argument("omega: 1 <= l <= m");
  std::vector<Grid3> chain = sample_rhs(f, sys, cfg);
  for (int i = 0; i < l; ++i)
    for (int c = 0; c < sys.components; ++c) chain[c] = apply_newtonian(chain[c], cfg);
  GridField out = GridField::zero(sys, cfg);
  out.comp = std::move(chain);
  return out;
}

GridField theta(const GridField& f, const SystemSpec& sys,
                const SolveConfig& cfg) {
  return theta_impl(f, sys, cfg).out;
}

namespace {

/// Least-squares polynomial fit of the grid values at nodes inside the ball,
/// in coordinates scaled by 1/R for conditioning.
Polynomial fit_grid_polynomial(const Grid3& g, int degree, double* rms) {
  int np = g.npts();
  double R = g.R();
  std::vector<MultiIndex> basis;
  for (int d = 0; d <= degree; ++d)
    for (const auto& b : indices_of_order(3, d)) basis.push_back(b);

  std::vector<Vec> pts;
  std::vector<double> vals;
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j)
      for (int k = 0; k < np; ++k) {
        Vec x = g.node(i, j, k);
        if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= R * R) {
          pts.push_back(x);
          vals.push_back(g.at(i, j, k));
        }
      }
  while (basis.size() * 2 > pts.size() && degree > 2) {
    --degree;
    while (!basis.empty() && basis.back().order() > degree) basis.pop_back();
  }

  Eigen::MatrixXd V(pts.size(), basis.size());
  Eigen::VectorXd y(pts.size());
  for (std::size_t r = 0; r < pts.size(); ++r) {
    y(r) = vals[r];
    for (std::size_t c = 0; c < basis.size(); ++c) {
      double t = 1.0;
      for (int a = 0; a < 3; ++a) t *= std::pow(pts[r][a] / R, basis[c][a]);
      V(r, c) = t;
    }
  }
  Eigen::VectorXd sol = V.colPivHouseholderQr().solve(y);
  if (rms) *rms = std::sqrt((V * sol - y).squaredNorm() / pts.size());

  Polynomial P(3);
  for (std::size_t c = 0; c < basis.size(); ++c) {
    double coef = sol(c) / std::pow(R, basis[c].order());
    if (std::abs(coef) > 1e-300) P.add_term(basis[c], coef);
  }
  return P;
}

/// N^m(P) minus its full order-(2m-1) jet at 0 and the Lambda-indexed
/// degree-2m monomials, all exact on the polynomial.
Polynomial theta_polynomial(const Polynomial& P, int m, double R) {
  Polynomial U = P;
  for (int l = 0; l < m; ++l) U = newtonian_polynomial(U, R);
  int twom = 2 * m;
  Polynomial T(3);
  for (const auto& [idx, c] : U.terms()) {
    bool cut = idx.order() < twom;
    if (idx.order() == twom) {
      for (int a = 0; a < 3 && !cut; ++a) cut = (idx[a] % 2 == 1);
    }
    if (cut) T.add_term(idx, c);
  }
  return U - T;
}

}  // namespace

SolutionEvaluator make_evaluator(const GridField& f, const SystemSpec& sys,
                                 const SolveConfig& cfg) {
  std::vector<Grid3> G = sample_rhs(f, sys, cfg);
  SolutionEvaluator ev;
  ev.n = sys.n;
  ev.m = sys.m;
  ev.R = cfg.R;
  int deg = std::min(cfg.fit_degree, MultiIndex::kMaxOrder - 2 * sys.m);
  for (int c = 0; c < sys.components; ++c) {
    double rms = 0.0;
    Polynomial P = fit_grid_polynomial(G[c], deg, &rms);
    ev.fit_rms = std::max(ev.fit_rms, rms);
    ev.u.push_back(cfg.h[c] + theta_polynomial(P, sys.m, cfg.R));
  }
  return ev;
}

std::pair<GridField, SolutionReport> picard_solve(const SystemSpec& sys,
                                                  const SolveConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  SolveConfig c = cfg;
  if (c.h.empty()) c.h.assign(sys.components, Polynomial(sys.n));
  if (static_cast<int>(c.h.size()) != sys.components)
    throw std::invalid_argument("picard_solve: one h per component");
  for (const auto& hc : c.h) {
    if (!is_m_harmonic(hc, sys.m))
      throw std::invalid_argument("picard_solve: h must be m-harmonic");
    if (hc.degree() > 2 * sys.m)
      throw std::invalid_argument("picard_solve: deg h <= 2m");
  }

  SolutionReport rep;
  GridField f = GridField::zero(sys, c);
  int grow = 0;
  double prev_diff = -1.0;
  for (int it = 1; it <= c.max_iters; ++it) {
    ThetaData td = theta_impl(f, sys, c);
    GridField fn = std::move(td.out);
    add_polynomials(fn, c.h, sys);
    double diff = fn.sup_diff(f);
    rep.diffs.push_back(diff);
    rep.iterations = it;
    f = std::move(fn);
    if (diff < c.tol) {
      rep.converged = true;
      break;
    }
    if (prev_diff >= 0.0 && diff > prev_diff) {
      if (++grow >= 3) {
        rep.diverged = true;
        rep.failure = "successive differences grew for 3 consecutive steps";
        break;
      }
    } else {
      grow = 0;
    }
    prev_diff = diff;
  }
  if (!rep.converged && !rep.diverged)
    rep.failure = "max_iters reached before tol";
  for (std::size_t i = 0; i + 1 < rep.diffs.size(); ++i)
    rep.ratios.push_back(rep.diffs[i] > 0.0 ? rep.diffs[i + 1] / rep.diffs[i] : 0.0);

  for (const auto& g : f.comp)
    for (int i = 0; i < g.npts(); ++i)
      for (int j = 0; j < g.npts(); ++j)
        for (int k = 0; k < g.npts(); ++k)
          rep.sup_norm = std::max(rep.sup_norm, std::abs(g.at(i, j, k)));

  // polynomial evaluator built from the final iterate's RHS samples
  SolutionEvaluator ev = make_evaluator(f, sys, c);

  // PDE residual at interior sample points (iterated 5-point Laplacian),
  // relative to the sup of the RHS over the ball-interior grid nodes
  {
    double rhs_scale = 0.0;
    std::vector<Grid3> Gfin = sample_rhs(f, sys, c);
    for (const auto& g : Gfin)
      for (int i = 0; i < g.npts(); ++i)
        for (int j = 0; j < g.npts(); ++j)
          for (int k = 0; k < g.npts(); ++k) {
            Vec x = g.node(i, j, k);
            if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= c.R * c.R)
              rhs_scale = std::max(rhs_scale, std::abs(g.at(i, j, k)));
          }
    std::mt19937 rng(321);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double h_fd = 1e-2 * c.R;
    double max_res = 0.0, max_a = 0.0;
    auto refs = sys.referenced_derivatives();
    for (int s = 0; s < 10; ++s) {
      Vec x(sys.n);
      double r2 = 1e9;
      while (r2 > 0.36 * c.R * c.R) {
        r2 = 0.0;
        for (int a = 0; a < sys.n; ++a) { x[a] = uni(rng) * 0.6 * c.R; r2 += x[a] * x[a]; }
      }
      dsl::Bindings b;
      for (int a = 0; a < sys.n; ++a) b["x" + std::to_string(a + 1)] = x[a];
      for (int cc = 0; cc < sys.components; ++cc) {
        auto u = [&](const Vec& y) { return ev.eval(cc, y); };
        b[uname(cc + 1)] = u(x);
        for (const auto& key : refs)
          if (key.first == cc + 1)
            b[dname(key.first, key.second)] = fd_derivative(u, x, key.second, 5e-2 * c.R);
      }
      for (int cc = 0; cc < sys.components; ++cc) {
        auto u = [&](const Vec& y) { return ev.eval(cc, y); };
        double lhs = fd_laplacian_pow(u, x, sys.m, h_fd);
        double rhs = dsl::eval(sys.rhs[cc], b);
        max_res = std::max(max_res, std::abs(lhs - rhs));
        max_a = std::max(max_a, std::abs(rhs));
      }
    }
    rep.residual_rel = max_res / std::max(std::max(rhs_scale, max_a), 1e-12);
  }

  // jet diagnostics at 0 by Richardson finite differences
  {
    Vec origin(sys.n, 0.0);
    for (int cc = 0; cc < sys.components; ++cc) {
      auto u = [&](const Vec& y) { return ev.eval(cc, y); };
      for (int d = 0; d <= 2 * sys.m; ++d)
        for (const auto& beta : indices_of_order(sys.n, d))
          rep.jets_at_zero[std::to_string(cc + 1) + "|" + beta.str()] =
              fd_derivative(u, origin, beta, 5e-2 * c.R);
    }
  }

  ContractionEstimate est = estimate_contraction(sys, c.R, c.gamma, 500);
  rep.delta_estimate = est.delta;
  rep.eta_estimate = est.eta;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(f), std::move(rep)};
}

// ---------------------------------------------------------------------------
// contraction estimates

ContractionEstimate estimate_contraction(const SystemSpec& sys, double R,
                                         double gamma, int sample_count,
                                         unsigned seed) {
  int twom = 2 * sys.m;
  ContractionEstimate est;
  for (int j = -1; j <= twom; ++j) { est.A[j] = 0.0; est.Q[j] = 0.0; est.L[j] = 0.0; }

  // group every referenced variable by derivative order (-1 for x)
  struct VarInfo {
    std::string name;
    int group;
  };
  std::vector<VarInfo> vars;
  std::set<std::string> seen;
  for (const auto& e : sys.rhs)
    for (const auto& name : dsl::variables(e)) {
      if (!seen.insert(name).second) continue;
      char kind;
      int comp;
      MultiIndex beta;
      parse_varname(name, sys.n, kind, comp, beta);
      int group = kind == 'x' ? -1 : (kind == 'u' ? 0 : beta.order());
      vars.push_back({name, group});
    }
  est.p2m_independent = true;
  for (const auto& v : vars)
    if (v.group == twom) est.p2m_independent = false;

  // symbolic gradients, and mixed second partials against the p_{2m} block
  std::map<std::string, std::vector<dsl::Expr>> d1;  // per component
  for (const auto& v : vars) {
    for (const auto& e : sys.rhs) d1[v.name].push_back(dsl::partial(e, v.name));
  }

  dsl::Bindings zero;
  for (const auto& v : vars) zero[v.name] = 0.0;
  for (int a = 0; a < sys.n; ++a) zero["x" + std::to_string(a + 1)] = 0.0;
  for (const auto& e : sys.rhs)
    est.a0 = std::max(est.a0, std::abs(dsl::eval(e, zero)));

  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto bound_for = [&](int group) {
    if (group == -1) return R;
    return std::pow(R, twom - group) * gamma;  // C = 1
  };
  auto draw = [&]() {
    dsl::Bindings b;
    for (int a = 0; a < sys.n; ++a)
      b["x" + std::to_string(a + 1)] = uni(rng) * R / std::sqrt(double(sys.n));
    for (const auto& v : vars) b[v.name] = uni(rng) * bound_for(v.group);
    return b;
  };
  auto grad_norm = [&](int group, const dsl::Bindings& b, bool& ok) {
    double s = 0.0;
    ok = true;
    try {
      if (group == -1) {
        for (int a = 0; a < sys.n; ++a) {
          std::string xn = "x" + std::to_string(a + 1);
          for (const auto& e : sys.rhs) {
            double v = dsl::eval(dsl::partial(e, xn), b);
            s += v * v;
          }
        }
      } else {
        for (const auto& v : vars) {
          if (v.group != group) continue;
          for (const auto& pe : d1[v.name]) {
            double pv = dsl::eval(pe, b);
            s += pv * pv;
          }
        }
      }
    } catch (const dsl::EvalError&) {
      ok = false;
    }
    return std::sqrt(s);
  };

  dsl::Bindings prev;
  std::map<int, double> prev_grad;
  bool have_prev = false;
  for (int s = 0; s < sample_count; ++s) {
    dsl::Bindings b = draw();
    std::map<int, double> g;
    bool all_ok = true;
    for (int j = -1; j <= twom; ++j) {
      bool ok;
      g[j] = grad_norm(j, b, ok);
      all_ok = all_ok && ok;
      if (ok) est.A[j] = std::max(est.A[j], g[j]);
    }
    // L_j: |d^2 a / dp_j dp_{2m}|, entrywise max
    if (!est.p2m_independent) {
      for (const auto& v2 : vars) {
        if (v2.group != twom) continue;
        for (const auto& v : vars) {
          for (const auto& e : sys.rhs) {
            try {
              double val = dsl::eval(dsl::partial(dsl::partial(e, v.name), v2.name), b);
              est.L[v.group] = std::max(est.L[v.group], std::abs(val));
            } catch (const dsl::EvalError&) {}
          }
        }
        for (int a = 0; a < sys.n; ++a) {
          std::string xn = "x" + std::to_string(a + 1);
          for (const auto& e : sys.rhs) {
            try {
              double val = dsl::eval(dsl::partial(dsl::partial(e, xn), v2.name), b);
              est.L[-1] = std::max(est.L[-1], std::abs(val));
            } catch (const dsl::EvalError&) {}
          }
        }
      }
    }
    if (have_prev && all_ok) {
      double dist2 = 0.0;
      for (const auto& [k, v] : b) dist2 += (v - prev.at(k)) * (v - prev.at(k));
      double dist = std::pow(std::sqrt(dist2), sys.alpha);
      if (dist > 1e-12)
        for (int j = -1; j <= twom; ++j)
          est.Q[j] = std::max(est.Q[j], std::abs(g[j] - prev_grad[j]) / dist);
    }
    prev = std::move(b);
    prev_grad = std::move(g);
    have_prev = all_ok;
  }

  double ga = std::pow(gamma, sys.alpha);
  double Ra = std::pow(R, sys.alpha);
  double holder_mix = Ra * (1.0 + Ra * ga + gamma);
  int jmax = est.p2m_independent ? twom - 1 : twom;
  double delta = 0.0;
  for (int j = 0; j <= jmax; ++j)
    delta += std::pow(R, twom - j) *
             (est.A[j] + holder_mix * est.Q[j] +
              (est.p2m_independent ? 0.0 : gamma * est.L[j]));
  est.delta = delta;
  est.eta = est.a0 +
            R * (est.A[-1] + holder_mix * est.Q[-1] +
                 (est.p2m_independent ? 0.0 : gamma * est.L[-1])) +
            gamma * delta;
  return est;
}

ParamSelection select_parameters(const SystemSpec& sys, SelectMode mode,
                                 double R0, double gamma0, int sample_count) {
  ParamSelection sel;
  // hypothesis checks at 0
  dsl::Bindings zero;
  for (int a = 0; a < sys.n; ++a) zero["x" + std::to_string(a + 1)] = 0.0;
  std::set<std::string> all_vars;
  for (const auto& e : sys.rhs)
    for (const auto& v : dsl::variables(e)) all_vars.insert(v);
  for (const auto& v : all_vars) zero[v] = 0.0;

  auto eval0 = [&](const dsl::Expr& e) {
    try {
      return dsl::eval(e, zero);
    } catch (const dsl::EvalError&) {
      return 0.0;  // abspow-style degeneracies at the origin evaluate to 0 limits
    }
  };

  double a0 = 0.0;
  for (const auto& e : sys.rhs) a0 = std::max(a0, std::abs(eval0(e)));
  if (a0 > 1e-8) {
    sel.failure = "a(0) != 0";
    return sel;
  }

  if (mode == SelectMode::AUTONOMOUS_LARGE_R) {
    for (const auto& e : sys.rhs)
      if (dsl::references_x(e)) {
        sel.failure = "rhs references x in autonomous mode";
        return sel;
      }
    for (const auto& v : all_vars)
      for (const auto& e : sys.rhs)
        if (std::abs(eval0(dsl::partial(e, v))) > 1e-8) {
          sel.failure = "grad a(0) != 0 (d/d" + v + ")";
          return sel;
        }
  } else {
    // small-ball route: the top-order derivative block must not enter a
    // to first order at 0, or the contraction constant cannot shrink with R
    int twom = 2 * sys.m;
    for (const auto& v : all_vars) {
      char kind;
      int comp;
      MultiIndex beta;
      parse_varname(v, sys.n, kind, comp, beta);
      if (kind != 'd' || beta.order() != twom) continue;
      for (const auto& e : sys.rhs) {
        dsl::Expr p = dsl::partial(e, v);
        if (std::abs(eval0(p)) + std::abs(eval0(dsl::partial(p, v))) > 1e-8) {
          sel.failure = "grad_{p_2m} a(0) != 0 (" + v + ")";
          return sel;
        }
      }
    }
  }

  double R = R0, gamma = gamma0;
  for (int halvings = 0; halvings <= 30; ++halvings) {
    ContractionEstimate est = estimate_contraction(sys, R, gamma, sample_count);
    if (est.delta <= 0.5 && est.eta < gamma / 2.0) {
      sel.ok = true;
      sel.R = R;
      sel.gamma = gamma;
      sel.halvings = halvings;
      sel.estimate = est;
      return sel;
    }
    if (mode == SelectMode::SMALL_BALL) R /= 2.0;
    else gamma /= 2.0;
  }
  sel.failure = "no admissible (R, gamma) after 30 halvings";
  return sel;
}

// ---------------------------------------------------------------------------
// initial-value shift

namespace {

std::string poly_to_src(const Polynomial& p) {
  if (p.terms().empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [idx, c] : p.terms()) {
    std::ostringstream os;
    os.precision(17);
    os << c;
    std::string term = "(" + os.str() + ")";
    for (int a = 0; a < idx.dim(); ++a)
      for (int e = 0; e < idx[a]; ++e) term += "*x" + std::to_string(a + 1);
    out += (first ? "" : " + ") + term;
    first = false;
  }
  return out;
}

dsl::Expr substitute(const dsl::Expr& e,
                     const std::map<std::string, dsl::Expr>& sub) {
  if (!e) return e;
  if (e->kind == dsl::NodeKind::Var) {
    auto it = sub.find(e->var_name);
    return it != sub.end() ? it->second : e;
  }
  auto n = std::make_shared<dsl::Node>(*e);
  n->lhs = substitute(e->lhs, sub);
  n->rhs = substitute(e->rhs, sub);
  return n;
}

}  // namespace

SystemSpec initial_value_shift(
    const SystemSpec& sys,
    const std::vector<std::map<MultiIndex, double>>& jets) {
  if (sys.dependence >= 2 * sys.m)
    throw std::invalid_argument(
        "initial_value_shift: rhs references order-2m derivatives");
  if (static_cast<int>(jets.size()) != sys.components)
    throw std::invalid_argument("initial_value_shift: one jet set per component");

  dsl::SymbolTable table = sys.table();
  std::vector<Polynomial> T;
  for (int c = 0; c < sys.components; ++c) {
    Polynomial t(sys.n);
    for (const auto& [beta, coef] : jets[c]) {
      if (beta.order() > 2 * sys.m - 1)
        throw std::invalid_argument("initial_value_shift: jets limited to |beta| <= 2m-1");
      t.add_term(beta, coef);
    }
    T.push_back(t);
  }

  std::map<std::string, dsl::Expr> sub;
  for (int c = 0; c < sys.components; ++c) {
    auto add_sub = [&](const std::string& name, const Polynomial& shift) {
      if (shift.terms().empty()) return;
      auto sum = std::make_shared<dsl::Node>();
      sum->kind = dsl::NodeKind::Add;
      sum->lhs = dsl::parse(name, table);
      sum->rhs = dsl::parse(poly_to_src(shift), table);
      sub[name] = sum;
    };
    add_sub(uname(c + 1), T[c]);
    for (int d = 1; d <= 2 * sys.m - 1; ++d)
      for (const auto& beta : indices_of_order(sys.n, d))
        add_sub(dname(c + 1, beta), T[c].derivative(beta));
  }

  std::vector<std::string> new_src;
  bool any_x = false;
  for (const auto& e : sys.rhs) {
    dsl::Expr s = substitute(e, sub);
    new_src.push_back(dsl::print(s));
    any_x = any_x || dsl::references_x(s);
  }
  return SystemSpec::make(sys.n, sys.m, sys.components, sys.alpha, new_src,
                          sys.autonomous && !any_x);
}

}  // namespace npot
