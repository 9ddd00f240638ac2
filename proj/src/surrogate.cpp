#include "pfmix/surrogate.hpp"

#include "pfmix/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pfmix {

namespace {

struct SplitMix64 {
  std::uint64_t s;
  explicit SplitMix64(std::uint64_t seed) : s(seed) {}
  std::uint64_t next() {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return ((next() >> 11) + 0.5) * 0x1.0p-53; }
};

Eigen::Vector3d random_direction(SplitMix64& rng) {
  for (;;) {
    const double u1 = rng.uniform(), u2 = rng.uniform();
    const double u3 = rng.uniform(), u4 = rng.uniform();
    const double r1 = std::sqrt(-2.0 * std::log(u1));
    const double r2 = std::sqrt(-2.0 * std::log(u3));
    Eigen::Vector3d z(r1 * std::cos(2.0 * M_PI * u2), r1 * std::sin(2.0 * M_PI * u2),
                      r2 * std::cos(2.0 * M_PI * u4));
    const double nrm = z.norm();
    if (nrm > 1e-8) return z / nrm;
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr int kSubsetSize = 256;
constexpr int kSubsetThreshold = 600;

GPModel subset_model(const GPModel& full) {
  const int n = full.n();
  const int stride = (n + kSubsetSize - 1) / kSubsetSize;
  const int m = (n + stride - 1) / stride;
  Eigen::Matrix<double, Eigen::Dynamic, 3> Xs(m, 3);
  Eigen::VectorXd ys(m);
  for (int i = 0, r = 0; i < n; i += stride, ++r) {
    Xs.row(r) = full.X.row(i);
    ys(r) = full.y(i);
  }
  return fit(Xs, ys, full.kernel);
}

}  // namespace

TrainingDataset generate_training_data(int n_curves, std::uint64_t seed, const Material& mat) {
  if (n_curves < 1) throw std::invalid_argument("generate_training_data: need n_curves >= 1");
  TrainingDataset d;
  d.seed = seed;
  d.n_curves = n_curves;
  d.samples.reserve(static_cast<size_t>(n_curves) * 20);

  for (int c = 0; c < n_curves; ++c) {
    bool done = false;
    for (int attempt = 0; attempt < 100 && !done; ++attempt) {
      SplitMix64 rng(seed * 1000003ull + static_cast<std::uint64_t>(c) * 1009ull + attempt);
      const Eigen::Vector3d dir = random_direction(rng);
      std::vector<TrainingSample> curve;
      PlasticState st;
      bool ok = true;
      for (int k = 1; k <= 20; ++k) {
        const Eigen::Vector3d eps = dir * (0.10 * k / 20.0);
        const HFResult r = update_stress(eps, st, mat);
        if (!r.converged) {
          ok = false;
          break;
        }
        st = r.state;
        curve.push_back({c, k, eps, r.resp.stress});
      }
      if (ok) {
        d.samples.insert(d.samples.end(), curve.begin(), curve.end());
        done = true;
      } else {
        ++d.redraws;
      }
    }
    if (!done)
      throw std::runtime_error("generate_training_data: curve " + std::to_string(c) +
                               " failed after 100 redraws");
  }
  return d;
}

void write_dataset_csv(const TrainingDataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open dataset file for writing: " + path);
  out << "curve,step,exx,eyy,gxy,sxx,syy,sxy\n";
  for (const auto& s : d.samples)
    out << s.curve << "," << s.step << "," << fmt(s.eps(0)) << "," << fmt(s.eps(1)) << ","
        << fmt(s.eps(2)) << "," << fmt(s.sig(0)) << "," << fmt(s.sig(1)) << ","
        << fmt(s.sig(2)) << "\n";
  if (!out) throw IoError("dataset write failed: " + path);
}

TrainingDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "curve,step,exx,eyy,gxy,sxx,syy,sxy")
    throw IoError("dataset parse error: bad header in " + path);
  TrainingDataset d;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    TrainingSample s;
    char comma;
    double v[6];
    ss >> s.curve >> comma >> s.step >> comma;
    for (int i = 0; i < 6; ++i) {
      ss >> v[i];
      if (i < 5) ss >> comma;
    }
    if (!ss) throw IoError("dataset parse error at line " + std::to_string(lineno));
    s.eps = Eigen::Vector3d(v[0], v[1], v[2]);
    s.sig = Eigen::Vector3d(v[3], v[4], v[5]);
    d.samples.push_back(s);
    d.n_curves = std::max(d.n_curves, s.curve + 1);
  }
  return d;
}

GPSurrogate::GPSurrogate(GPModel gx, GPModel gy, GPModel gxy, const Eigen::Matrix3d& De,
                         double E, double nu)
    : De_(De), E_(E), nu_(nu) {
  gp_[0] = std::move(gx);
  gp_[1] = std::move(gy);
  gp_[2] = std::move(gxy);
  if (gp_[0].n() != gp_[1].n() || gp_[0].n() != gp_[2].n())
    throw std::invalid_argument("GPSurrogate: components trained on different set sizes");
  use_subset_ = gp_[0].n() > kSubsetThreshold;
  if (use_subset_)
    for (int c = 0; c < 3; ++c) sub_[c] = subset_model(gp_[c]);
}

const GPModel& GPSurrogate::component(int c) const { return gp_[c]; }

double GPSurrogate::max_sf() const {
  return std::max({gp_[0].kernel.sf, gp_[1].kernel.sf, gp_[2].kernel.sf});
}

bool GPSurrogate::response(int, const Eigen::Vector3d& eps, ConstitutiveResponse& out) {
  out.stress = De_ * eps;
  out.tangent = De_;
  for (int c = 0; c < 3; ++c) {
    Eigen::Vector3d g;
    out.stress(c) += predict_mean(gp_[c], eps, &g);
    out.tangent.row(c) += g.transpose();
  }
  return true;
}

void GPSurrogate::probe(const Eigen::Vector3d& eps, Eigen::Vector3d& stress, double& U) const {
  stress = De_ * eps;
  U = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto [mu, var] = predict(gp_[c], eps);
    stress(c) += mu;
    U = std::max(U, std::sqrt(var));
  }
}

void GPSurrogate::uncertainty_batch(const std::vector<Eigen::Vector3d>& eps,
                                    UncertaintyBatch& out) const {
  const int m = static_cast<int>(eps.size());
  Eigen::Matrix<double, Eigen::Dynamic, 3> Xq(m, 3);
  for (int i = 0; i < m; ++i) Xq.row(i) = eps[i].transpose();

  out.value.assign(m, 0.0);
  out.exact.assign(m, use_subset_ ? 0 : 1);
  const GPModel* models = use_subset_ ? sub_ : gp_;
  Eigen::VectorXd var;
  for (int c = 0; c < 3; ++c) {
    predict_batch(models[c], Xq, nullptr, &var);
    for (int i = 0; i < m; ++i)
      out.value[i] = std::max(out.value[i], std::sqrt(var(i)));
  }
}

void GPSurrogate::refine_uncertainty(const std::vector<Eigen::Vector3d>& eps,
                                     const std::vector<int>& ips,
                                     UncertaintyBatch& out) const {
  if (ips.empty()) return;
  const int m = static_cast<int>(ips.size());
  Eigen::Matrix<double, Eigen::Dynamic, 3> Xq(m, 3);
  for (int i = 0; i < m; ++i) Xq.row(i) = eps[ips[i]].transpose();

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m), var;
  for (int c = 0; c < 3; ++c) {
    predict_batch(gp_[c], Xq, nullptr, &var);
    for (int i = 0; i < m; ++i) acc(i) = std::max(acc(i), std::sqrt(var(i)));
  }
  for (int i = 0; i < m; ++i) {
    out.value[ips[i]] = acc(i);
    out.exact[ips[i]] = 1;
  }
}

void GPSurrogate::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open model file for writing: " + path);
  out << "surrogate 1\n";
  out << "material " << fmt(E_) << " " << fmt(nu_) << "\n";
  const int n = gp_[0].n();
  out << "n " << n << "\n";
  for (int i = 0; i < n; ++i)
    out << fmt(gp_[0].X(i, 0)) << " " << fmt(gp_[0].X(i, 1)) << " " << fmt(gp_[0].X(i, 2))
        << "\n";
  const char* names[3] = {"xx", "yy", "xy"};
  for (int c = 0; c < 3; ++c) {
    out << "component " << names[c] << "\n";
    out << "kernel " << fmt(gp_[c].kernel.sf) << " " << fmt(gp_[c].kernel.ell) << " "
        << fmt(gp_[c].kernel.sn) << "\n";
    for (int i = 0; i < n; ++i) out << fmt(gp_[c].y(i)) << "\n";
  }
  if (!out) throw IoError("model write failed: " + path);
}

std::unique_ptr<GPSurrogate> GPSurrogate::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "surrogate" || version != 1)
    throw IoError("model parse error: bad format line in " + path);
  double E, nu;
  in >> tag >> E >> nu;
  if (!in || tag != "material") throw IoError("model parse error: material line");
  int n;
  in >> tag >> n;
  if (!in || tag != "n" || n < 1) throw IoError("model parse error: size line");

  Eigen::Matrix<double, Eigen::Dynamic, 3> X(n, 3);
  for (int i = 0; i < n; ++i) in >> X(i, 0) >> X(i, 1) >> X(i, 2);
  if (!in) throw IoError("model parse error: X block");

  GPModel comp[3];
  const char* names[3] = {"xx", "yy", "xy"};
  for (int c = 0; c < 3; ++c) {
    std::string cname;
    in >> tag >> cname;
    if (!in || tag != "component" || cname != names[c])
      throw IoError("model parse error: component header");
    Kernel k;
    in >> tag >> k.sf >> k.ell >> k.sn;
    if (!in || tag != "kernel") throw IoError("model parse error: kernel line");
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) in >> y(i);
    if (!in) throw IoError("model parse error: y block");
    comp[c] = fit(X, y, k);
  }
  return std::make_unique<GPSurrogate>(std::move(comp[0]), std::move(comp[1]),
                                       std::move(comp[2]), elastic_matrix(E, nu), E, nu);
}

std::unique_ptr<GPSurrogate> fit_surrogate(const TrainingDataset& data, const Material& mat,
                                           std::uint64_t seed) {
  const int n = static_cast<int>(data.samples.size());
  if (n < 2) throw std::invalid_argument("fit_surrogate: need at least 2 samples");

  Eigen::Matrix<double, Eigen::Dynamic, 3> X(n, 3);
  Eigen::MatrixXd Y(n, 3);
  for (int i = 0; i < n; ++i) {
    const auto& s = data.samples[i];
    X.row(i) = s.eps.transpose();
    Y.row(i) = (s.sig - mat.De * s.eps).transpose();
  }

  // components are independent; train them concurrently
  GPModel comp[3];
  std::exception_ptr errs[3] = {nullptr, nullptr, nullptr};
  auto train_one = [&](int c) {
    try {
      const Eigen::VectorXd y = Y.col(c);
      const OptimizeResult opt = optimize_hyperparameters(X, y, seed + c);
      comp[c] = fit(X, y, opt.kernel);
    } catch (...) {
      errs[c] = std::current_exception();
    }
  };
  std::thread t1(train_one, 1), t2(train_one, 2);
  train_one(0);
  t1.join();
  t2.join();
  for (int c = 0; c < 3; ++c)
    if (errs[c]) std::rethrow_exception(errs[c]);
  return std::make_unique<GPSurrogate>(std::move(comp[0]), std::move(comp[1]),
                                       std::move(comp[2]), mat.De, mat.E, mat.nu);
}

PerfectSurrogate::PerfectSurrogate(const Material& mat, int n_ips,
                                   std::atomic<long long>* hf_counter)
    : mat_(mat), committed_(n_ips), tentative_(n_ips), touched_(n_ips, 0),
      counter_(hf_counter) {}

bool PerfectSurrogate::response(int ip, const Eigen::Vector3d& eps, ConstitutiveResponse& out) {
  const HFResult r = update_stress(eps, committed_[ip], mat_);
  if (counter_) counter_->fetch_add(1, std::memory_order_relaxed);
  if (!r.converged) return false;
  tentative_[ip] = r.state;
  touched_[ip] = 1;
  out = r.resp;
  return true;
}

void PerfectSurrogate::uncertainty_batch(const std::vector<Eigen::Vector3d>& eps,
                                         UncertaintyBatch& out) const {
  out.value.assign(eps.size(), 0.0);
  out.exact.assign(eps.size(), 1);
}

void PerfectSurrogate::refine_uncertainty(const std::vector<Eigen::Vector3d>&,
                                          const std::vector<int>&, UncertaintyBatch&) const {}

void PerfectSurrogate::begin_attempt() {
  tentative_ = committed_;
  std::fill(touched_.begin(), touched_.end(), 0);
}

void PerfectSurrogate::commit(const std::vector<Eigen::Vector3d>& eps_converged) {
  for (size_t ip = 0; ip < committed_.size(); ++ip) {
    if (!touched_[ip]) {
      const HFResult r = update_stress(eps_converged[ip], committed_[ip], mat_);
      if (counter_) counter_->fetch_add(1, std::memory_order_relaxed);
      if (!r.converged)
        throw std::runtime_error("PerfectSurrogate: commit re-evaluation failed");
      committed_[ip] = r.state;
    } else {
      committed_[ip] = tentative_[ip];
    }
    touched_[ip] = 0;
  }
}

}  // namespace pfmix
