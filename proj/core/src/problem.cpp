#include "pdd/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace pdd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const Vec& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(v.size()) + ", expected " + std::to_string(n) + ")");
  }
}

Vec soft_threshold(const Vec& v, double t) {
  return v.unaryExpr([t](double x) {
    const double mag = std::abs(x) - t;
    return mag > 0.0 ? std::copysign(mag, x) : 0.0;
  });
}

}  // namespace

LocalCost::LocalCost(Mat hessian, Vec linear, double offset, double ridge)
    : h_(std::move(hessian)), b_(std::move(linear)), c_(offset) {
  if (h_.rows() != h_.cols() || h_.rows() != b_.size()) {
    throw std::invalid_argument("LocalCost: Hessian must be square and match the linear term");
  }
  if (ridge < 0.0) throw std::invalid_argument("LocalCost: ridge must be nonnegative");
  const double scale = std::max(1.0, h_.cwiseAbs().maxCoeff());
  if ((h_ - h_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("LocalCost: Hessian is not symmetric");
  }
  h_ = 0.5 * (h_ + h_.transpose());
  if (ridge > 0.0) h_.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<Mat> eig(h_, Eigen::EigenvaluesOnly);
  lmin_ = eig.eigenvalues()(0);
  lmax_ = eig.eigenvalues()(eig.eigenvalues().size() - 1);
  if (lmin_ < -1e-12 * scale) throw std::invalid_argument("LocalCost: Hessian is not PSD");
}

double LocalCost::value(const Vec& w) const {
  require_dim(w, dim(), "LocalCost::value");
  return 0.5 * w.dot(h_ * w) - b_.dot(w) + c_;
}

Vec LocalCost::gradient(const Vec& w) const {
  require_dim(w, dim(), "LocalCost::gradient");
  return h_ * w - b_;
}

Vec grad_local(const LocalCost& cost, const Vec& w) { return cost.gradient(w); }

NonSmoothTerm NonSmoothTerm::l1(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("l1 term needs lambda > 0");
  return {NonSmoothKind::l1, lambda};
}

double NonSmoothTerm::value(const Vec& u) const {
  switch (kind) {
    case NonSmoothKind::zero: return 0.0;
    case NonSmoothKind::l1: return lambda * u.lpNorm<1>();
    case NonSmoothKind::indicator_zero: return u.isZero(0.0) ? 0.0 : kInf;
  }
  return 0.0;
}

double NonSmoothTerm::conjugate_value(const Vec& v) const {
  switch (kind) {
    case NonSmoothKind::zero: return v.isZero(0.0) ? 0.0 : kInf;
    case NonSmoothKind::l1: return v.size() == 0 || v.lpNorm<Eigen::Infinity>() <= lambda ? 0.0 : kInf;
    case NonSmoothKind::indicator_zero: return 0.0;
  }
  return 0.0;
}

std::string to_string(NonSmoothKind kind) {
  switch (kind) {
    case NonSmoothKind::zero: return "zero";
    case NonSmoothKind::l1: return "l1";
    case NonSmoothKind::indicator_zero: return "indicator-zero";
  }
  return "unknown";
}

NonSmoothKind parse_nonsmooth_kind(const std::string& name) {
  if (name == "zero") return NonSmoothKind::zero;
  if (name == "l1") return NonSmoothKind::l1;
  if (name == "indicator-zero") return NonSmoothKind::indicator_zero;
  throw std::invalid_argument("unknown non-smooth term '" + name + "'");
}

Vec prox_g(const NonSmoothTerm& g, double mu, const Vec& v) {
  if (!(mu > 0.0)) throw std::invalid_argument("prox_g: mu must be positive");
  switch (g.kind) {
    case NonSmoothKind::zero: return v;
    case NonSmoothKind::l1: return soft_threshold(v, mu * g.lambda);
    case NonSmoothKind::indicator_zero: return Vec::Zero(v.size());
  }
  return v;
}

Vec prox_conjugate(const NonSmoothTerm& g, double mu, const Vec& v) {
  if (!(mu > 0.0)) throw std::invalid_argument("prox_conjugate: mu must be positive");
  // Closed forms of the Moreau identity v - mu prox_{g/mu}(v/mu).
  switch (g.kind) {
    case NonSmoothKind::zero: return Vec::Zero(v.size());
    case NonSmoothKind::l1: return v.cwiseMax(-g.lambda).cwiseMin(g.lambda);
    case NonSmoothKind::indicator_zero: return v;
  }
  return v;
}

CouplingMatrices::CouplingMatrices(std::vector<Mat> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("CouplingMatrices: no agents");
  m_ = static_cast<std::size_t>(blocks_.front().rows());
  for (const auto& c : blocks_) {
    if (static_cast<std::size_t>(c.rows()) != m_) {
      throw std::invalid_argument("CouplingMatrices: every C_k needs the same row count");
    }
    offsets_.push_back(q_);
    q_ += static_cast<std::size_t>(c.cols());
  }
}

Mat CouplingMatrices::stacked() const {
  Mat c(static_cast<Index>(m_), static_cast<Index>(q_));
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    c.middleCols(static_cast<Index>(offsets_[k]), blocks_[k].cols()) = blocks_[k];
  }
  return c;
}

Mat CouplingMatrices::block_diagonal() const {
  const auto n = static_cast<Index>(blocks_.size());
  const auto m = static_cast<Index>(m_);
  Mat cd = Mat::Zero(m * n, static_cast<Index>(q_));
  for (Index k = 0; k < n; ++k) {
    const auto& c = blocks_[static_cast<std::size_t>(k)];
    cd.block(k * m, static_cast<Index>(offsets_[static_cast<std::size_t>(k)]), m, c.cols()) = c;
  }
  return cd;
}

Vec CouplingMatrices::apply(const Vec& w) const {
  require_dim(w, q_, "CouplingMatrices::apply");
  Vec out = Vec::Zero(static_cast<Index>(m_));
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    out += blocks_[k] * w.segment(static_cast<Index>(offsets_[k]), blocks_[k].cols());
  }
  return out;
}

SharingProblem::SharingProblem(std::vector<LocalCost> costs_in, CouplingMatrices coupling_in,
                               NonSmoothTerm gterm_in)
    : costs(std::move(costs_in)), coupling(std::move(coupling_in)), gterm(gterm_in) {
  if (costs.size() != coupling.agents()) {
    throw std::invalid_argument("SharingProblem: cost and coupling agent counts differ");
  }
  delta = 0.0;
  nu = kInf;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    if (static_cast<Index>(costs[k].dim()) != coupling.block(k).cols()) {
      throw std::invalid_argument("SharingProblem: C_k columns do not match Q_k of agent " +
                                  std::to_string(k + 1));
    }
    delta = std::max(delta, costs[k].lambda_max());
    nu = std::min(nu, costs[k].lambda_min());
  }
  nu = std::max(nu, 0.0);
}

Vec SharingProblem::stacked_gradient(const Vec& w) const {
  require_dim(w, primal_dim(), "SharingProblem::stacked_gradient");
  Vec g(w.size());
  for (std::size_t k = 0; k < agents(); ++k) {
    const auto off = static_cast<Index>(offset(k));
    const auto q = static_cast<Index>(block_dim(k));
    g.segment(off, q) = costs[k].gradient(w.segment(off, q));
  }
  return g;
}

double SharingProblem::smooth_value(const Vec& w) const {
  require_dim(w, primal_dim(), "SharingProblem::smooth_value");
  double total = 0.0;
  for (std::size_t k = 0; k < agents(); ++k) {
    total += costs[k].value(w.segment(static_cast<Index>(offset(k)), static_cast<Index>(block_dim(k))));
  }
  return total;
}

double SharingProblem::objective(const Vec& w) const {
  return smooth_value(w) + gterm.value(coupling.apply(w));
}

PairResiduals pair_residuals(const SharingProblem& problem, const Vec& w, const Vec& y) {
  require_dim(y, problem.dual_dim(), "pair_residuals");
  const Mat c = problem.coupling.stacked();
  PairResiduals r;
  r.stationarity = (c.transpose() * y + problem.stacked_gradient(w)).norm();
  r.inclusion = (y - prox_conjugate(problem.gterm, 1.0, y + c * w)).norm();
  return r;
}

namespace {

struct DualModel {
  std::vector<Eigen::LLT<Mat>> chol;
  Mat p;  // sum_k C_k H_k^{-1} C_k^T
  Vec q;  // sum_k C_k H_k^{-1} b_k
};

DualModel make_dual_model(const SharingProblem& problem) {
  DualModel d;
  const auto m = static_cast<Index>(problem.dual_dim());
  d.p = Mat::Zero(m, m);
  d.q = Vec::Zero(m);
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    d.chol.emplace_back(problem.costs[k].hessian());
    if (d.chol.back().info() != Eigen::Success) {
      throw std::invalid_argument("solve_centralized: local Hessian is not positive definite");
    }
    const Mat& ck = problem.coupling.block(k);
    const Mat hinv_ct = d.chol.back().solve(ck.transpose());
    d.p += ck * hinv_ct;
    d.q += ck * d.chol.back().solve(problem.costs[k].linear());
  }
  d.p = 0.5 * (d.p + d.p.transpose());
  return d;
}

Vec recover_primal(const SharingProblem& problem, const DualModel& d, const Vec& y) {
  Vec w(static_cast<Index>(problem.primal_dim()));
  for (std::size_t k = 0; k < problem.agents(); ++k) {
    const Mat& ck = problem.coupling.block(k);
    w.segment(static_cast<Index>(problem.offset(k)), ck.cols()) =
        d.chol[k].solve(problem.costs[k].linear() - ck.transpose() * y);
  }
  return w;
}

// One active-set solve of the box-constrained dual QP at the current guess.
Vec polish_box(const DualModel& d, const Vec& y, double lambda) {
  const Index m = y.size();
  const Vec grad = d.p * y - d.q;
  const double edge = 1e-9 * std::max(1.0, lambda);
  std::vector<Index> free_idx;
  Vec out = y;
  for (Index i = 0; i < m; ++i) {
    if (y(i) >= lambda - edge && grad(i) <= 0.0) {
      out(i) = lambda;
    } else if (y(i) <= -lambda + edge && grad(i) >= 0.0) {
      out(i) = -lambda;
    } else {
      free_idx.push_back(i);
    }
  }
  if (free_idx.empty()) return out;
  const auto nf = static_cast<Index>(free_idx.size());
  Mat pff(nf, nf);
  Vec rhs(nf);
  for (Index a = 0; a < nf; ++a) {
    rhs(a) = d.q(free_idx[a]);
    for (Index i = 0; i < m; ++i) {
      if (std::find(free_idx.begin(), free_idx.end(), i) == free_idx.end()) {
        rhs(a) -= d.p(free_idx[a], i) * out(i);
      }
    }
    for (Index b = 0; b < nf; ++b) pff(a, b) = d.p(free_idx[a], free_idx[b]);
  }
  const Vec yf = pff.completeOrthogonalDecomposition().solve(rhs);
  for (Index a = 0; a < nf; ++a) out(free_idx[a]) = std::clamp(yf(a), -lambda, lambda);
  return out;
}

}  // namespace

GroundTruth solve_centralized(const SharingProblem& problem, double tol, std::size_t max_iter) {
  if (!(problem.nu > 0.0)) {
    throw std::invalid_argument("solve_centralized: curvature bounds violated (nu must be > 0)");
  }
  const DualModel d = make_dual_model(problem);
  const auto m = static_cast<Index>(problem.dual_dim());
  GroundTruth gt;
  auto finish = [&](Vec y) {
    gt.w_star = recover_primal(problem, d, y);
    gt.y_star = std::move(y);
    gt.primal_value = problem.objective(gt.w_star);
    gt.residual = pair_residuals(problem, gt.w_star, gt.y_star).max();
    return gt;
  };

  switch (problem.gterm.kind) {
    case NonSmoothKind::zero:
      return finish(Vec::Zero(m));
    case NonSmoothKind::indicator_zero:
      return finish(d.p.completeOrthogonalDecomposition().solve(d.q));
    case NonSmoothKind::l1:
      break;
  }

  const double lambda = problem.gterm.lambda;
  Eigen::SelfAdjointEigenSolver<Mat> eig(d.p, Eigen::EigenvaluesOnly);
  const double lip = std::max(eig.eigenvalues()(m - 1), 1e-300);
  const double step = 1.0 / lip;
  auto box = [lambda](const Vec& v) { return v.cwiseMax(-lambda).cwiseMin(lambda); };
  auto residual_of = [&](const Vec& y) {
    return pair_residuals(problem, recover_primal(problem, d, y), y).max();
  };

  Vec y = Vec::Zero(m);
  Vec y_prev = y;
  Vec v = y;
  double t = 1.0;
  double last = kInf;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    y_prev = y;
    y = box(v - step * (d.p * v - d.q));
    // Adaptive restart keeps the momentum from overshooting on the box faces.
    if ((v - y).dot(y - y_prev) > 0.0) {
      t = 1.0;
      v = y;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      v = y + ((t - 1.0) / t_next) * (y - y_prev);
      t = t_next;
    }
    if (it % 25 == 0 || it == max_iter) {
      const Vec polished = polish_box(d, y, lambda);
      const double rp = residual_of(polished);
      if (rp <= tol) {
        gt.iterations = it;
        return finish(polished);
      }
      last = residual_of(y);
      if (last <= tol) {
        gt.iterations = it;
        return finish(y);
      }
    }
  }
  throw CentralizedSolveError("solve_centralized: no convergence within " +
                                  std::to_string(max_iter) + " iterations",
                              last);
}

std::string to_string(InstanceFamily family) {
  return family == InstanceFamily::private_blocks ? "private-blocks" : "consensus-mean";
}

InstanceFamily parse_instance_family(const std::string& name) {
  if (name == "private-blocks" || name == "A") return InstanceFamily::private_blocks;
  if (name == "consensus-mean" || name == "B") return InstanceFamily::consensus_mean;
  throw std::invalid_argument("unknown instance family '" + name + "'");
}

namespace {

NonSmoothTerm make_gterm(NonSmoothKind kind, double lambda) {
  switch (kind) {
    case NonSmoothKind::zero: return NonSmoothTerm::zero();
    case NonSmoothKind::l1: return NonSmoothTerm::l1(lambda);
    case NonSmoothKind::indicator_zero: return NonSmoothTerm::indicator_zero();
  }
  return NonSmoothTerm::zero();
}

Vec sparse_signal(std::size_t p, std::size_t s, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(p);
  for (std::size_t i = 0; i < p; ++i) idx[i] = i;
  // Partial Fisher-Yates with explicit draws so the support is portable across stdlibs.
  Vec x = Vec::Zero(static_cast<Index>(p));
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (p - i));
    std::swap(idx[i], idx[j]);
    x(static_cast<Index>(idx[i])) = (rng() & 1U) ? 1.0 : -1.0;
  }
  return x;
}

Mat gaussian(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

CsInstance make_cs_instance(const CsOptions& o) {
  if (o.n_agents == 0 || o.p == 0 || o.m_k == 0) {
    throw std::invalid_argument("make_cs_instance: n_agents, p and m_k must be positive");
  }
  const std::size_t s = o.sparsity == 0 ? (o.p + 9) / 10 : o.sparsity;
  if (s > o.p) throw std::invalid_argument("make_cs_instance: sparsity exceeds p");
  if (o.noise_std < 0.0) throw std::invalid_argument("make_cs_instance: noise_std < 0");

  std::mt19937_64 rng(o.seed);
  const auto p = static_cast<Index>(o.p);
  const auto n = static_cast<Index>(o.n_agents);
  const double ridge = o.m_k < o.p ? o.ridge : 0.0;
  const std::size_t mdim = o.family == InstanceFamily::consensus_mean
                               ? o.p
                               : (o.coupling_dim == 0 ? std::max<std::size_t>(1, o.p / 2) : o.coupling_dim);

  Vec signal(n * p);
  const Vec common = sparse_signal(o.p, s, rng);
  for (Index k = 0; k < n; ++k) {
    signal.segment(k * p, p) = o.family == InstanceFamily::consensus_mean ? common : sparse_signal(o.p, s, rng);
  }

  std::vector<LocalCost> costs;
  std::vector<Mat> coupling;
  std::vector<Mat> sensing;
  std::vector<Vec> measurements;
  const auto mk = static_cast<Index>(o.m_k);
  for (Index k = 0; k < n; ++k) {
    Mat mm = gaussian(mk, p, 1.0 / std::sqrt(static_cast<double>(o.m_k)), rng);
    Vec noise = o.noise_std > 0.0 ? Vec(gaussian(mk, 1, o.noise_std, rng)) : Vec(Vec::Zero(mk));
    Vec y = mm * signal.segment(k * p, p) + noise;
    Mat ck = o.family == InstanceFamily::consensus_mean
                 ? Mat(Mat::Identity(p, p) / static_cast<double>(o.n_agents))
                 : gaussian(static_cast<Index>(mdim), p, 1.0 / std::sqrt(static_cast<double>(o.p)), rng);
    costs.emplace_back(mm.transpose() * mm, mm.transpose() * y, 0.5 * y.squaredNorm(), ridge);
    coupling.push_back(std::move(ck));
    sensing.push_back(std::move(mm));
    measurements.push_back(std::move(y));
  }

  SharingProblem problem(std::move(costs), CouplingMatrices(std::move(coupling)),
                         make_gterm(o.gterm, o.lambda));
  GroundTruth truth = solve_centralized(problem);
  return CsInstance{o, std::move(problem), std::move(truth), std::move(signal),
                    std::move(sensing), std::move(measurements), ridge};
}

void write_matrix_csv(const Mat& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

Mat read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path.string() + ": ragged CSV matrix");
    }
    rows.push_back(std::move(row));
  }
  Mat m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

void write_instance(const CsInstance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& o = inst.options;
  {
    std::ofstream man(dir / "manifest.txt");
    man << std::setprecision(std::numeric_limits<double>::max_digits10);
    man << "family = " << to_string(o.family) << '\n'
        << "n = " << o.n_agents << '\n'
        << "p = " << o.p << '\n'
        << "m_k = " << o.m_k << '\n'
        << "sparsity = " << o.sparsity << '\n'
        << "noise_std = " << o.noise_std << '\n'
        << "lambda = " << o.lambda << '\n'
        << "rho = " << inst.ridge_applied << '\n'
        << "ridge_option = " << o.ridge << '\n'
        << "coupling_dim = " << o.coupling_dim << '\n'
        << "gterm = " << to_string(o.gterm) << '\n'
        << "seed = " << o.seed << '\n';
  }
  for (std::size_t k = 0; k < inst.problem.agents(); ++k) {
    const std::string id = std::to_string(k + 1);
    write_matrix_csv(inst.problem.costs[k].hessian(), dir / ("H_" + id + ".csv"));
    write_matrix_csv(inst.problem.costs[k].linear(), dir / ("b_" + id + ".csv"));
    write_matrix_csv(inst.problem.coupling.block(k), dir / ("C_" + id + ".csv"));
    write_matrix_csv(inst.sensing[k], dir / ("M_" + id + ".csv"));
    write_matrix_csv(inst.measurements[k], dir / ("y_" + id + ".csv"));
  }
  write_matrix_csv(inst.signal, dir / "signal.csv");
}

CsInstance read_instance(const std::filesystem::path& dir) {
  std::ifstream man(dir / "manifest.txt");
  if (!man) throw std::runtime_error("missing manifest in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(man, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("manifest missing key '" + key + "'");
    return it->second;
  };
  CsOptions o;
  o.family = parse_instance_family(get("family"));
  o.n_agents = std::stoul(get("n"));
  o.p = std::stoul(get("p"));
  o.m_k = std::stoul(get("m_k"));
  o.sparsity = std::stoul(get("sparsity"));
  o.noise_std = std::stod(get("noise_std"));
  o.lambda = std::stod(get("lambda"));
  o.ridge = std::stod(get("ridge_option"));
  o.coupling_dim = std::stoul(get("coupling_dim"));
  o.gterm = parse_nonsmooth_kind(get("gterm"));
  o.seed = std::stoull(get("seed"));

  std::vector<LocalCost> costs;
  std::vector<Mat> coupling, sensing;
  std::vector<Vec> measurements;
  for (std::size_t k = 0; k < o.n_agents; ++k) {
    const std::string id = std::to_string(k + 1);
    Vec y = read_matrix_csv(dir / ("y_" + id + ".csv"));
    costs.emplace_back(read_matrix_csv(dir / ("H_" + id + ".csv")),
                       Vec(read_matrix_csv(dir / ("b_" + id + ".csv"))), 0.5 * y.squaredNorm());
    coupling.push_back(read_matrix_csv(dir / ("C_" + id + ".csv")));
    sensing.push_back(read_matrix_csv(dir / ("M_" + id + ".csv")));
    measurements.push_back(std::move(y));
  }
  SharingProblem problem(std::move(costs), CouplingMatrices(std::move(coupling)),
                         make_gterm(o.gterm, o.lambda));
  GroundTruth truth = solve_centralized(problem);
  return CsInstance{o, std::move(problem), std::move(truth), Vec(read_matrix_csv(dir / "signal.csv")),
                    std::move(sensing), std::move(measurements), std::stod(get("rho"))};
}

}  // namespace pdd
