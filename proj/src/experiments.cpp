#include "fpl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "fpl/core_spaces.hpp"
#include "fpl/fock.hpp"
#include "fpl/linalg.hpp"
#include "fpl/mixing.hpp"
#include "fpl/oscillator.hpp"
#include "fpl/random.hpp"
#include "fpl/subsystem.hpp"

namespace fpl::experiments {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

long parse_int(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(Errc::InvalidArgument, "parameter '" + key + "' expects an integer, got '" + s + "'");
}

double parse_real(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(Errc::InvalidArgument, "parameter '" + key + "' expects a real number, got '" + s + "'");
}

ParamSpec p_int(std::string n, std::string def, std::string doc, bool req = false) {
  return {std::move(n), ParamType::Int, req, std::move(def), std::move(doc)};
}
ParamSpec p_real(std::string n, std::string def, std::string doc) {
  return {std::move(n), ParamType::Real, false, std::move(def), std::move(doc)};
}
ParamSpec p_ilist(std::string n, std::string def, std::string doc) {
  return {std::move(n), ParamType::IntList, false, std::move(def), std::move(doc)};
}
ParamSpec p_rlist(std::string n, std::string def, std::string doc) {
  return {std::move(n), ParamType::RealList, false, std::move(def), std::move(doc)};
}
ParamSpec p_text(std::string n, std::string def, std::string doc) {
  return {std::move(n), ParamType::Text, false, std::move(def), std::move(doc)};
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) { return splitmix64(seed ^ splitmix64(tag + 0x51ED)); }

std::string fmt(double v) { return format_double(v); }

}  // namespace

const std::vector<Schema>& schemas() {
  static const std::vector<Schema> s = {
      {"haar-moments",
       "Haar SU(f) first moments, |U_jk|^2 and the cross-kernel suppression ratio",
       {p_int("f", "", "matrix size", true), p_int("samples", "200000", "Monte Carlo samples"),
        p_int("kernel_samples", "1000", "samples per kernel-ratio estimate"),
        p_int("kernel_f_small", "16", "smaller f of the kernel ratio"),
        p_int("kernel_f_large", "64", "larger f of the kernel ratio"),
        p_real("k_se", "4", "tolerance in standard errors"),
        p_real("ratio_min", "0.4", "lower bound on ratio(large)/ratio(small)"),
        p_real("ratio_max", "0.6", "upper bound on ratio(large)/ratio(small)")}},
      {"det-moments",
       "Determinant moments of c(U) and superposition-extraction checks",
       {p_int("f", "", "matrix size", true), p_int("n", "0", "particle count"),
        p_ilist("i1", "", "0-based subset I1 of {0..n-1}"), p_int("samples", "100000", "samples or chain length"),
        p_text("measure", "haar", "haar, trace or det"), p_real("alpha", "0", "exponent of weighted measures"),
        p_real("k_se", "4", "tolerance in standard errors"),
        p_int("extraction_f", "6", "f of the superposition-extraction check"),
        p_int("extraction_samples", "10000", "samples of the mixed-term means")}},
      {"subsystem-density",
       "Density operators from partial traces and minors, examples and the minor identity",
       {p_int("systems", "25", "random systems"), p_int("f_max", "5", "largest particle number"),
        p_int("dim_max", "10", "largest one-particle dimension"), p_int("minor_matrices", "100", "matrices for the minor identity"),
        p_real("kappa", "0.6", "outer norm in the mixed-state example"),
        p_real("tol_routes", "1e-7", "agreement of the two density routes"),
        p_real("tol_example", "1e-9", "tolerance of the worked examples"),
        p_real("tol_minor", "1e-9", "tolerance of the minor identity")}},
      {"nogo-singlet",
       "Projector approximation and the singlet no-go search",
       {p_int("samples", "10000", "random projectors"), p_int("dim", "6", "one-particle dimension"),
        p_int("max_rank", "4", "largest projector rank"), p_int("observables", "20", "random one-particle observables"),
        p_real("tol_hs", "1e-12", "Hilbert-Schmidt identity tolerance"),
        p_real("tol_projector", "1e-10", "projector-approximation tolerance"),
        p_real("expected_floor", "0.05", "expected lower bound of the residual floor")}},
      {"mixing-singlet",
       "Layered singlet: measurement rule B values, effective space and fidelity",
       {p_int("grid", "4096", "lattice sites"), p_int("bump_width", "256", "bump support in cells"),
        p_ilist("epsilons", "64,32,16", "layer widths, coarse to fine"), p_real("tol", "0.05", "target tolerance at the finest layer"),
        p_real("fidelity_min", "0.99", "fidelity threshold at the finest layer"),
        p_real("monotone_floor", "1e-12", "slack of the non-increasing check")}},
      {"action-minimize",
       "Causal classification, closed-chain spectra and the action minimizer",
       {p_int("m", "2", "space-time points"), p_int("f", "2", "particle number"), p_real("t0", "8", "constraint value"),
        p_int("random_samples", "100", "random feasible frames"), p_int("restarts", "8", "minimizer restarts"),
        p_int("max_iterations", "300", "iterations per restart"), p_int("spectrum_trials", "20", "random projectors for the spectrum check"),
        p_real("tol_spectrum", "1e-9", "spectrum agreement tolerance")}},
      {"oscillator-intertwine",
       "Embedding of the quantum oscillator into classical phase space",
       {p_real("omega", "1", "frequency"), p_int("n_max", "16", "truncation"), p_int("n_test", "12", "largest tested level"),
        p_rlist("times", "0.1,1,7.3", "times in units of 1/omega"), p_real("tol_dynamics", "1e-8", "evolution tolerance"),
        p_real("tol_operators", "1e-10", "operator tolerance"), p_real("box", "6.283185307179586", "mode box length"),
        p_real("cutoff", "1", "mode momentum cutoff")}},
      {"trajectory-approx",
       "Phase-space trajectory ensembles under grid refinement",
       {p_real("omega", "1", "frequency"), p_ilist("sides", "4,8,16,32", "grid sides, coarse to fine"),
        p_rlist("times", "0,0.5,1.3,2.9", "times in units of 1/omega"),
        p_real("monotone_floor", "1e-13", "slack of the non-increasing check")}},
      {"holographic-coherence",
       "Site-dependent mixing and the non-transitive coherence relation",
       {p_int("f", "64", "number of states"), p_real("threshold", "0.5", "coherence threshold")}},
  };
  return s;
}

const Schema& schema(const std::string& experiment) {
  for (const auto& s : schemas())
    if (s.name == experiment) return s;
  fail(Errc::UnknownExperiment, "unknown experiment '" + experiment + "'");
}

Config Config::parse(const std::string& text) {
  Config c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    require(eq != std::string::npos, Errc::InvalidArgument, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    require(!key.empty(), Errc::InvalidArgument, "line " + std::to_string(lineno) + ": empty key");
    require(!c.values.count(key), Errc::InvalidArgument, "duplicate key '" + key + "'");
    c.values[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::InvalidArgument, "cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Params::Params(const Schema& schema, const Config& config) {
  for (const auto& [k, v] : config.values) {
    bool known = std::any_of(schema.params.begin(), schema.params.end(), [&](const ParamSpec& p) { return p.name == k; });
    require(known, Errc::InvalidArgument, "unknown parameter '" + k + "' for " + schema.name);
  }
  for (const auto& p : schema.params) {
    auto it = config.values.find(p.name);
    std::string v;
    if (it != config.values.end()) v = it->second;
    else {
      require(!p.required, Errc::MissingParameter, "required parameter '" + p.name + "' missing for " + schema.name);
      v = p.default_value;
    }
    // Validate and normalize.
    std::string norm;
    switch (p.type) {
      case ParamType::Int: norm = std::to_string(parse_int(p.name, v)); break;
      case ParamType::Real: norm = fmt(parse_real(p.name, v)); break;
      case ParamType::IntList: {
        auto items = split_list(v);
        for (std::size_t i = 0; i < items.size(); ++i) norm += (i ? "," : "") + std::to_string(parse_int(p.name, items[i]));
        break;
      }
      case ParamType::RealList: {
        auto items = split_list(v);
        for (std::size_t i = 0; i < items.size(); ++i) norm += (i ? "," : "") + fmt(parse_real(p.name, items[i]));
        break;
      }
      case ParamType::Text: norm = v; break;
    }
    resolved_.emplace_back(p.name, norm);
  }
}

const std::string& Params::raw(const std::string& key) const {
  for (const auto& [k, v] : resolved_)
    if (k == key) return v;
  fail(Errc::MissingParameter, "parameter '" + key + "' not in schema");
}

long Params::get_int(const std::string& key) const { return parse_int(key, raw(key)); }
double Params::get_real(const std::string& key) const { return parse_real(key, raw(key)); }
std::vector<long> Params::get_int_list(const std::string& key) const {
  std::vector<long> out;
  for (const auto& s : split_list(raw(key))) out.push_back(parse_int(key, s));
  return out;
}
std::vector<double> Params::get_real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(raw(key))) out.push_back(parse_real(key, s));
  return out;
}
const std::string& Params::get_text(const std::string& key) const { return raw(key); }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void Report::add(const std::string& key, double v) { summary.emplace_back(key, format_double(v)); }
void Report::add(const std::string& key, long v) { summary.emplace_back(key, std::to_string(v)); }
void Report::add(const std::string& key, const std::string& v) { summary.emplace_back(key, v); }
void Report::add(const std::string& key, bool v) { summary.emplace_back(key, v ? "true" : "false"); }
void Report::criterion(const std::string& name, bool pass) { criteria.emplace_back(name, pass); }
bool Report::all_pass() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.second; });
}

namespace {

using mixing::Estimate;

// Adds mean, standard errors, target and the k-sigma verdict of an estimate.
bool add_estimate(Report& r, const std::string& key, const Estimate& e, Complex target, double k) {
  bool ok = e.within(target, k);
  r.add(key + ".mean_re", e.mean.real());
  r.add(key + ".mean_im", e.mean.imag());
  r.add(key + ".se_re", e.se_real);
  r.add(key + ".se_im", e.se_imag);
  r.add(key + ".target_re", target.real());
  r.add(key + ".target_im", target.imag());
  r.add(key + ".tolerance_se", k);
  r.add(key + ".pass", ok);
  return ok;
}

std::vector<std::string> estimate_row(const std::string& name, const Estimate& e, Complex target, double k) {
  return {name, fmt(e.mean.real()), fmt(e.mean.imag()), fmt(e.se_real), fmt(e.se_imag), fmt(target.real()),
          fmt(e.deviation_in_se(target)), e.within(target, k) ? "true" : "false"};
}

const std::vector<std::string> kEstimateHeader = {"quantity", "mean_re", "mean_im", "se_re", "se_im",
                                                  "target", "deviation_se", "pass"};

std::string entries_name(const std::vector<std::pair<int, int>>& e) {
  std::string s = "prod";
  for (auto [i, j] : e) s += "_U" + std::to_string(i) + std::to_string(j);
  return s;
}

Report haar_moments(const Params& p, std::uint64_t seed) {
  Report r;
  const int f = static_cast<int>(p.get_int("f"));
  require(f >= 2, Errc::InvalidArgument, "f must be at least 2");
  const long n = p.get_int("samples");
  const double k = p.get_real("k_se");

  // Products with strictly increasing row indices and p <= f - 1 factors.
  std::vector<std::vector<std::pair<int, int>>> products = {{{0, 0}}, {{0, f - 1}}};
  if (f >= 3) {
    products.push_back({{0, 0}, {1, 1}});
    products.push_back({{0, 1}, {1, 0}});
  }
  if (f - 1 > 2) {
    std::vector<std::pair<int, int>> diag;
    for (int i = 0; i < f - 1; ++i) diag.push_back({i, (i + 1) % f});
    products.push_back(diag);
  }
  std::vector<std::pair<int, int>> squares = {{0, 0}, {0, f - 1}, {f - 1, 1}};

  std::vector<mixing::MomentSpec> specs;
  for (const auto& e : products) specs.push_back(mixing::EntryProduct{e});
  for (auto [i, j] : squares) specs.push_back(mixing::AbsSquare{i, j});
  auto est = mixing::mc_moments(f, specs, n, seed);

  Table t{"moments", kEstimateHeader, {}};
  bool first_ok = true, square_ok = true;
  for (std::size_t i = 0; i < products.size(); ++i) {
    std::string name = entries_name(products[i]);
    first_ok &= add_estimate(r, name, est[i], 0.0, k);
    t.rows.push_back(estimate_row(name, est[i], 0.0, k));
  }
  for (std::size_t i = 0; i < squares.size(); ++i) {
    std::string name = "abs2_U" + std::to_string(squares[i].first) + std::to_string(squares[i].second);
    const auto& e = est[products.size() + i];
    square_ok &= add_estimate(r, name, e, 1.0 / f, k);
    t.rows.push_back(estimate_row(name, e, 1.0 / f, k));
  }
  r.tables.push_back(t);
  r.criterion("criterion_1_haar_moments", first_ok && square_ok);

  const int fs_ = static_cast<int>(p.get_int("kernel_f_small"));
  const int fl = static_cast<int>(p.get_int("kernel_f_large"));
  const long ks = p.get_int("kernel_samples");
  Estimate rs = mixing::mc_moments(fs_, mixing::KernelRatio{}, ks, derive(seed, 1));
  Estimate rl = mixing::mc_moments(fl, mixing::KernelRatio{}, ks, derive(seed, 2));
  double q = rl.mean.real() / rs.mean.real();
  r.add("kernel_ratio_small.mean", rs.mean.real());
  r.add("kernel_ratio_small.se", rs.se_real);
  r.add("kernel_ratio_large.mean", rl.mean.real());
  r.add("kernel_ratio_large.se", rl.se_real);
  r.add("kernel_ratio_quotient", q);
  r.add("kernel_ratio_quotient.expected", std::sqrt(double(fs_) / fl));
  r.add("kernel_ratio_quotient.min", p.get_real("ratio_min"));
  r.add("kernel_ratio_quotient.max", p.get_real("ratio_max"));
  r.criterion("criterion_2_kernel_suppression", q >= p.get_real("ratio_min") && q <= p.get_real("ratio_max"));
  return r;
}

std::string set_name(const std::vector<int>& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? " " : "") + std::to_string(s[i]);
  return out + "}";
}

Report det_moments_exp(const Params& p, std::uint64_t seed) {
  Report r;
  const int f = static_cast<int>(p.get_int("f"));
  const int n = static_cast<int>(p.get_int("n"));
  require(f >= 2 && n >= 0 && n <= f, Errc::InvalidArgument, "need f >= 2 and 0 <= n <= f");
  std::vector<int> i1;
  for (long v : p.get_int_list("i1")) i1.push_back(static_cast<int>(v));
  const double k = p.get_real("k_se");
  const std::string& mname = p.get_text("measure");
  mixing::MeasureSpec m;
  if (mname == "haar") m.kind = mixing::MeasureKind::Haar;
  else if (mname == "trace") m.kind = mixing::MeasureKind::TraceWeighted;
  else if (mname == "det") m.kind = mixing::MeasureKind::DetWeighted;
  else fail(Errc::InvalidArgument, "measure must be haar, trace or det");
  m.alpha = p.get_real("alpha");

  auto dm = mixing::det_moments(f, n, i1, m, p.get_int("samples"), seed, {i1});
  std::vector<int> i2 = complement(i1, n);
  double target = (i1.empty() ? 1.0 : 0.0) + (i2.empty() ? 1.0 : 0.0);
  r.add("i1", set_name(i1));
  r.add("i2", set_name(i2));
  r.add("acceptance", dm.acceptance);
  bool ok = add_estimate(r, "first_moment", dm.first, target, k);
  r.add("second_moment.mean_re", dm.second[0].mean.real());
  r.add("second_moment.se_re", dm.second[0].se_real);
  if (target > 0.0) r.add("second_moment.implied_c", dm.second[0].mean.real() / target);
  Table t{"det_moments", kEstimateHeader, {estimate_row("first_moment", dm.first, target, k)}};
  r.tables.push_back(t);
  if (m.kind == mixing::MeasureKind::Haar && n == 0) r.criterion("criterion_3_det_moment_n0", ok);

  // Superposition extraction at f = extraction_f without sea.
  const int fe = static_cast<int>(p.get_int("extraction_f"));
  require(fe >= 3, Errc::InvalidArgument, "extraction_f must be at least 3");
  const long ne = p.get_int("extraction_samples");
  double pure_defect = 0.0, det_defect = 0.0;
  std::vector<int> all(fe);
  for (int j = 0; j < fe; ++j) all[j] = j;
  for (int s = 0; s < 32; ++s) {
    Rng rng = stream(derive(seed, 3), s);
    CMatrix u = mixing::haar_sample(fe, rng);
    pure_defect = std::max(pure_defect, std::abs(mixing::superposition_extraction(u, {{}, {}}, fe) - Complex(1.0)));
    Complex dU = mixing::superposition_extraction(u, {all, all}, fe);
    det_defect = std::max({det_defect, std::abs(dU - det(u)), std::abs(dU - Complex(1.0))});
  }
  r.add("extraction.pure_defect", pure_defect);
  r.add("extraction.det_defect", det_defect);
  r.add("extraction.exact_tolerance", 1e-12);
  std::vector<mixing::TermSelector> mixed = {
      {{0}, {0}}, {{0}, {2}}, {{1, 3}, {0, 4}}, {{0, 1, 2}, {2, 3, 5}}, {std::vector<int>(all.begin(), all.end() - 1),
                                                                        std::vector<int>(all.begin() + 1, all.end())}};
  bool mixed_ok = true;
  Table te{"extraction", kEstimateHeader, {}};
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    Estimate e = mixing::mixed_term_mean(fe, mixed[i], fe, ne, derive(seed, 10 + i));
    std::string name = "mixed_" + std::to_string(i);
    r.add(name + ".slots", set_name(mixed[i].region2_slots));
    r.add(name + ".labels", set_name(mixed[i].region2_labels));
    mixed_ok &= add_estimate(r, name, e, 0.0, k);
    te.rows.push_back(estimate_row(name, e, 0.0, k));
  }
  r.tables.push_back(te);
  r.criterion("criterion_10_superposition_extraction", pure_defect <= 1e-12 && det_defect <= 1e-12 && mixed_ok);
  return r;
}

Report subsystem_density_exp(const Params& p, std::uint64_t seed) {
  Report r;
  const int systems = static_cast<int>(p.get_int("systems"));
  const int fmax = static_cast<int>(p.get_int("f_max"));
  const int dmax = static_cast<int>(p.get_int("dim_max"));
  require(fmax >= 1 && dmax > fmax && dmax <= fock::kMaxDim, Errc::InvalidArgument, "need 1 <= f_max < dim_max <= 24");

  double route = 0.0, trace_defect = 0.0;
  Table t{"routes", {"system", "dim", "f", "inner_dim", "distance", "trace_defect"}, {}};
  for (int s = 0; s < systems; ++s) {
    Rng rng = stream(seed, s);
    int f = 1 + static_cast<int>(rng() % fmax);
    int d = f + 1 + static_cast<int>(rng() % (dmax - f));
    int inner = 1 + static_cast<int>(rng() % (d - 1));
    CMatrix q = Eigen::HouseholderQR<CMatrix>(complex_gaussian(d, d, rng)).householderQ();
    auto split = subsystem::SubsystemSplit::from_projector(q.leftCols(inner) * q.leftCols(inner).adjoint());
    CMatrix states = Eigen::HouseholderQR<CMatrix>(complex_gaussian(d, f, rng)).householderQ() * CMatrix::Identity(d, f);
    auto a = subsystem::density_partial_trace(states, split);
    auto b = subsystem::density_minors(states, split);
    double dist = a.distance(b);
    double td = std::abs(a.trace() - Complex(1.0));
    route = std::max(route, dist);
    trace_defect = std::max(trace_defect, td);
    t.rows.push_back({std::to_string(s), std::to_string(d), std::to_string(f), std::to_string(inner), fmt(dist), fmt(td)});
  }
  r.tables.push_back(t);
  r.add("routes.max_distance", route);
  r.add("routes.tolerance", p.get_real("tol_routes"));
  r.add("routes.max_trace_defect", trace_defect);

  // Hartree-Fock recovery: all states inside the inner subspace.
  const double tol_ex = p.get_real("tol_example");
  double hf = 0.0;
  {
    const int d = 6, f = 3;
    Rng rng = stream(derive(seed, 1), 0);
    CMatrix states = Eigen::HouseholderQR<CMatrix>(complex_gaussian(4, f, rng)).householderQ() * CMatrix::Identity(4, f);
    CMatrix full = CMatrix::Zero(d, f);
    full.topRows(4) = states;
    auto split = subsystem::SubsystemSplit::coordinate(d, {0, 1, 2, 3});
    CVector psi = fock::wedge(full).to_dense();
    for (const auto& rho : {subsystem::density_partial_trace(full, split), subsystem::density_minors(full, split)}) {
      for (int g = 0; g < f; ++g) hf = std::max(hf, rho.sectors[g].cwiseAbs().maxCoeff());
      // f! |Psi><Psi| with <Psi|Psi> = 1/f! is the unit Slater dyad.
      hf = std::max(hf, (rho.sectors[f] - psi * psi.adjoint()).cwiseAbs().maxCoeff());
    }
  }
  r.add("hf_recovery.defect", hf);
  r.add("hf_recovery.tolerance", 1e-12);

  // Mixed-state example: weights kappa^4, 2 kappa^2, 3!.
  const double kap = p.get_real("kappa");
  double kdef = 0.0;
  {
    const int d = 6;
    CMatrix st = CMatrix::Zero(d, 3);
    const double c = std::sqrt(1.0 - kap * kap);
    st(0, 0) = 1.0;
    st(1, 1) = c;
    st(4, 1) = kap;
    st(2, 2) = c;
    st(5, 2) = kap;
    auto split = subsystem::SubsystemSplit::coordinate(d, {0, 1, 2, 3});
    CMatrix inner = split.inner * st;
    auto unit_wedge = [&](std::vector<int> cols) {
      CMatrix v(d, cols.size());
      for (std::size_t k = 0; k < cols.size(); ++k) v.col(k) = inner.col(cols[k]).normalized();
      return fock::wedge(v).to_dense();
    };
    std::vector<std::pair<std::vector<int>, double>> expected = {
        {{0}, std::pow(kap, 4)}, {{0, 1}, 2 * kap * kap}, {{0, 2}, 2 * kap * kap}, {{0, 1, 2}, 6.0}};
    for (const auto& rho : {subsystem::density_partial_trace(st, split), subsystem::density_minors(st, split)}) {
      for (const auto& [cols, w] : expected) {
        int g = static_cast<int>(cols.size());
        CVector u = unit_wedge(cols);
        // Weight on the 1/g!-normalized dyad: g! times the unit dyad weight of
        // g!-scaled wedges, i.e. g! * <u|rho|u> * (inner norms)^2.
        double norms2 = 1.0;
        for (int cidx : cols) norms2 *= inner.col(cidx).squaredNorm();
        double got = factorial(g) * (u.adjoint() * rho.sectors[g] * u)(0, 0).real() / norms2;
        kdef = std::max(kdef, std::abs(got - w));
      }
    }
  }
  r.add("kappa_example.defect", kdef);
  r.add("kappa_example.tolerance", tol_ex);

  const double tol_minor = p.get_real("tol_minor");
  double mres = 0.0, mcond = 0.0;
  for (int s = 0; s < p.get_int("minor_matrices"); ++s) {
    Rng rng = stream(derive(seed, 2), s);
    int n = 5 + s % 4;
    CMatrix a = complex_gaussian(n, n, rng) + 2.0 * CMatrix::Identity(n, n);
    int g = 1 + static_cast<int>(rng() % (n - 1));
    auto all = subsets(n, g);
    auto i = all[rng() % all.size()], ip = all[rng() % all.size()];
    auto mi = subsystem::minor_identity(a, i, ip);
    mres = std::max(mres, mi.residual);
    mcond = std::max(mcond, mi.condition);
  }
  r.add("minor_identity.max_residual", mres);
  r.add("minor_identity.max_condition", mcond);
  r.add("minor_identity.tolerance", tol_minor);
  r.criterion("criterion_6_subsystem_density",
              route <= p.get_real("tol_routes") && hf <= 1e-12 && kdef <= tol_ex && mres <= tol_minor);
  return r;
}

Report nogo_singlet_exp(const Params& p, std::uint64_t seed) {
  Report r;
  // Projector approximation of the singlet on modes uA=0, dA=1, uB=2, dB=3, outer 4..7.
  const int d = 8;
  fock::FockVector psi = fock::basis_state(d, {0, 3}) - fock::basis_state(d, {1, 2});
  psi *= 1.0 / std::sqrt(2.0);
  auto split = subsystem::SubsystemSplit::coordinate(d, {0, 1, 2, 3});
  auto approx = subsystem::approx_by_projector(psi, split);
  double perr = 0.0;
  const int nobs = static_cast<int>(p.get_int("observables"));
  for (int k = 0; k < nobs + 2; ++k) {
    CMatrix o;
    if (k == 0) { o = CMatrix::Zero(d, d); o(0, 0) = 1.0; }
    else if (k == 1) { o = CMatrix::Zero(d, d); o(3, 3) = 1.0; }
    else {
      Rng rng = stream(derive(seed, 1), k);
      o = split.inner * random_hermitian(d, rng) * split.inner;
    }
    auto lifted = fock::lift_one_particle(o, 2);
    Complex oracle = fock::fock_inner(psi, lifted.apply(psi)) / psi.norm2();
    Complex got = (approx.projector * o).trace();
    perr = std::max(perr, std::abs(got - oracle));
    if (k < 2) r.add(k == 0 ? "projector.S_up_A" : "projector.S_down_B", got.real());
  }
  r.add("projector.max_error", perr);
  r.add("projector.tolerance", p.get_real("tol_projector"));
  r.add("projector.rank", static_cast<long>(approx.frame.cols()));
  r.criterion("criterion_7_projector_approximation", perr <= p.get_real("tol_projector"));

  auto s = subsystem::nogo_random_search(static_cast<int>(p.get_int("dim")), static_cast<int>(p.get_int("max_rank")),
                                         static_cast<int>(p.get_int("samples")), seed);
  r.add("nogo.samples", static_cast<long>(s.samples));
  r.add("nogo.floor", s.floor);
  r.add("nogo.floor_rank", static_cast<long>(s.floor_rank));
  r.add("nogo.analytic_bound", std::sqrt(1.25) - 1.0);
  r.add("nogo.expected_floor", p.get_real("expected_floor"));
  r.add("nogo.floor_above_expected", s.floor >= p.get_real("expected_floor"));
  r.add("nogo.any_zero", s.any_zero);
  r.add("nogo.max_hs_identity_residual", s.max_hs_identity_residual);
  r.add("nogo.hs_tolerance", p.get_real("tol_hs"));
  r.criterion("criterion_8_singlet_nogo", s.max_hs_identity_residual <= p.get_real("tol_hs") && !s.any_zero && s.floor > 0.0);
  return r;
}

Report mixing_singlet_exp(const Params& p, std::uint64_t seed) {
  Report r;
  auto eps = p.get_int_list("epsilons");
  require(!eps.empty(), Errc::InvalidArgument, "need at least one layer width");
  const double tol = p.get_real("tol"), fmin = p.get_real("fidelity_min"), floor = p.get_real("monotone_floor");
  Table t{"singlet", {"epsilon_cells", "observable", "value", "target", "abs_error"}, {}};
  std::vector<mixing::SingletReport> reps;
  for (long e : eps) {
    mixing::SingletConfig cfg;
    cfg.grid = static_cast<int>(p.get_int("grid"));
    cfg.bump_width = static_cast<int>(p.get_int("bump_width"));
    cfg.epsilon = static_cast<int>(e);
    auto rep = mixing::singlet_experiment(cfg, seed);
    std::string pre = "eps_" + std::to_string(e) + ".";
    for (std::size_t k = 0; k < rep.names.size(); ++k) {
      t.rows.push_back({std::to_string(e), rep.names[k], fmt(rep.values[k]), fmt(rep.targets[k]), fmt(rep.errors[k])});
      r.add(pre + rep.names[k], rep.values[k]);
    }
    r.add(pre + "max_error", rep.max_error);
    r.add(pre + "fidelity", rep.fidelity);
    r.add(pre + "effective_dim", rep.effective_dim);
    r.add(pre + "symmetry_defect", rep.symmetry_defect);
    r.add(pre + "imaginary_residue", rep.imaginary_residue);
    r.add(pre + "collapse_eigenvalue", rep.collapse_eigenvalue);
    reps.push_back(rep);
  }
  r.tables.push_back(t);
  bool mono = true;
  for (std::size_t k = 1; k < reps.size(); ++k) mono &= reps[k].max_error <= reps[k - 1].max_error + floor;
  const auto& fine = reps.back();
  r.add("finest.max_error", fine.max_error);
  r.add("finest.tolerance", tol);
  r.add("finest.fidelity", fine.fidelity);
  r.add("finest.fidelity_min", fmin);
  r.add("max_error_non_increasing", mono);
  r.add("monotone_floor", floor);
  r.criterion("criterion_9_mixing_singlet", fine.max_error <= tol && mono && fine.fidelity >= fmin);
  return r;
}

// Largest distance after greedy matching of two spectra.
double spectrum_distance(const std::array<Complex, 4>& a, const std::array<Complex, 4>& b) {
  std::vector<Complex> rest(b.begin(), b.end());
  double worst = 0.0;
  for (Complex z : a) {
    auto it = std::min_element(rest.begin(), rest.end(), [&](Complex u, Complex v) { return std::abs(u - z) < std::abs(v - z); });
    worst = std::max(worst, std::abs(*it - z));
    rest.erase(it);
  }
  return worst;
}

Report action_minimize_exp(const Params& p, std::uint64_t seed) {
  Report r;
  using namespace core;
  const std::array<std::pair<std::array<Complex, 4>, Causal>, 3> examples = {{
      {{Complex(1), Complex(2), Complex(3), Complex(4)}, Causal::Timelike},
      {{Complex(1, 1), Complex(1, -1), Complex(-1, 1), Complex(-1, -1)}, Causal::Spacelike},
      {{Complex(1, 1), Complex(1, -1), Complex(2), Complex(3)}, Causal::Lightlike},
  }};
  bool causal_ok = true;
  for (std::size_t k = 0; k < examples.size(); ++k) {
    Causal c = classify_causal(examples[k].first);
    r.add("causal_example_" + std::to_string(k), causal_name(c));
    causal_ok &= c == examples[k].second;
  }

  double spec = 0.0;
  {
    auto st = DiscreteSpacetime::standard(3);
    for (int s = 0; s < p.get_int("spectrum_trials"); ++s) {
      Rng rng = stream(derive(seed, 1), s);
      auto pr = frame_to_projector(st.space, random_negative_frame(st, 1 + s % 3, rng));
      for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) {
          auto a = closed_chain(pr, st, x, y), b = closed_chain(pr, st, y, x);
          double scale = 1.0;
          for (auto z : a.eigenvalues) scale = std::max(scale, std::abs(z));
          spec = std::max(spec, spectrum_distance(a.eigenvalues, b.eigenvalues) / scale);
        }
    }
  }
  r.add("spectrum.max_distance", spec);
  r.add("spectrum.tolerance", p.get_real("tol_spectrum"));

  const int m = static_cast<int>(p.get_int("m")), f = static_cast<int>(p.get_int("f"));
  const double t0 = p.get_real("t0");
  auto st = DiscreteSpacetime::standard(m);
  MinimizeOptions o;
  o.seed = seed;
  o.restarts = static_cast<int>(p.get_int("restarts"));
  o.max_iterations = static_cast<int>(p.get_int("max_iterations"));
  auto res = minimize_action(st, f, t0, o);
  auto again = minimize_action(st, f, t0, o);
  bool reproducible = res.action == again.action && res.constraint == again.constraint &&
                      res.projector.matrix == again.projector.matrix && res.iterations == again.iterations;

  double best = std::numeric_limits<double>::infinity();
  long feasible = 0;
  for (int s = 0; s < p.get_int("random_samples"); ++s) {
    Rng rng = stream(derive(seed, 2), s);
    CMatrix fr = random_negative_frame(st, f, rng);
    if (!match_constraint(st, fr, t0)) continue;
    ++feasible;
    best = std::min(best, action_and_constraint(frame_to_projector(st.space, fr).matrix, st).action);
  }
  r.add("minimizer.action", res.action);
  r.add("minimizer.constraint", res.constraint);
  r.add("minimizer.constraint_target", t0);
  r.add("minimizer.constraint_tolerance_rel", 1e-6);
  r.add("minimizer.initial_action", res.initial_action);
  r.add("minimizer.iterations", static_cast<long>(res.iterations));
  r.add("minimizer.best_restart", static_cast<long>(res.best_restart));
  r.add("minimizer.no_progress", res.no_progress);
  r.add("minimizer.reproducible", reproducible);
  r.add("random_search.feasible", feasible);
  r.add("random_search.best_action", best);
  Table t{"minimizer_trace", {"step", "action"}, {}};
  for (std::size_t k = 0; k < res.trace.size(); ++k) t.rows.push_back({std::to_string(k), fmt(res.trace[k])});
  r.tables.push_back(t);
  bool beats = feasible > 0 && res.action <= best && res.constraint_met;
  r.criterion("criterion_12_action", causal_ok && spec <= p.get_real("tol_spectrum") && beats && reproducible);
  return r;
}

Report oscillator_exp(const Params& p, std::uint64_t seed) {
  Report r;
  using namespace osc;
  const double w = p.get_real("omega");
  const int nmax = static_cast<int>(p.get_int("n_max"));
  const int ntest = static_cast<int>(p.get_int("n_test"));
  require(ntest <= nmax - 2, Errc::InvalidArgument, "n_test must lie in the safe window n_max - 2");
  const double tdyn = p.get_real("tol_dynamics"), top = p.get_real("tol_operators");
  auto times = p.get_real_list("times");

  double dyn = 0.0, iso = 0.0;
  Table t{"intertwine", {"state", "t", "residual"}, {}};
  for (int n = 0; n <= ntest + 1; ++n) {
    QuantumState psi;
    std::string name;
    if (n <= ntest) {
      psi = QuantumState::basis(w, nmax, n);
      name = "Psi_" + std::to_string(n);
    } else {
      Rng rng = stream(seed, 0);
      CVector c = CVector::Zero(nmax + 1);
      c.head(ntest + 1) = complex_gaussian(ntest + 1, 1, rng).col(0);
      psi = QuantumState::from_coeffs(w, c / c.norm());
      name = "random";
    }
    iso = std::max(iso, std::abs(embed(psi).norm() - psi.norm()));
    for (double tt : times) {
      double res = intertwine_residual(psi, tt / w);
      dyn = std::max(dyn, res);
      t.rows.push_back({name, fmt(tt / w), fmt(res)});
    }
  }
  r.tables.push_back(t);

  auto q = quantum_operators(w, nmax);
  auto c = classical_operators(w, nmax);
  double lad = std::max(operator_intertwine_residual(c.a_cl, q.a, nmax), operator_intertwine_residual(c.a_cl_dag, q.a_dag, nmax));
  double h = operator_intertwine_residual(c.h, q.h, nmax);
  double qq = operator_intertwine_residual(c.q, q.q, nmax);
  double pp = operator_intertwine_residual(c.p, q.p, nmax);
  // [a_cl, a_cl^*] = 1 on the degrees below n_max.
  int inner = hermite2_size(nmax - 1);
  CMatrix comm = c.a_cl * c.a_cl_dag - c.a_cl_dag * c.a_cl;
  double ccr = (comm.topLeftCorner(inner, inner) - CMatrix::Identity(inner, inner)).cwiseAbs().maxCoeff();
  CMatrix e = embedding_matrix(nmax);
  double lam = 0.0;
  for (int n = 0; n <= nmax; ++n) lam = std::max(lam, (c.rotation * e.col(n) - double(n) * e.col(n)).norm());

  auto modes = mode_collection(p.get_real("box"), p.get_real("cutoff"));
  double mm = multimode_intertwine_residual({QuantumState::basis(w, nmax, 1), QuantumState::basis(w, nmax, 0)}, 1.0 / w);

  r.add("evolution.max_residual", dyn);
  r.add("evolution.tolerance", tdyn);
  r.add("isometry.max_defect", iso);
  r.add("ladder.residual", lad);
  r.add("hamiltonian.residual", h);
  r.add("position.residual", qq);
  r.add("momentum.residual", pp);
  r.add("commutator.defect", ccr);
  r.add("rotation_eigen.defect", lam);
  r.add("operators.tolerance", top);
  r.add("modes.count", static_cast<long>(modes.modes.size()));
  r.add("multimode.residual", mm);
  bool ops = std::max({lad, h, qq, pp, ccr, lam, iso}) <= top;
  r.criterion("criterion_11_intertwining", dyn <= tdyn && ops && mm <= tdyn);
  return r;
}

Report trajectory_exp(const Params& p, std::uint64_t) {
  Report r;
  using namespace osc;
  const double w = p.get_real("omega");
  auto sides = p.get_int_list("sides");
  auto times = p.get_real_list("times");
  for (double& x : times) x /= w;
  const double floor = p.get_real("monotone_floor");
  CVector c = CVector::Zero(5);
  c(0) = c(1) = 1.0 / std::sqrt(2.0);
  ClassicalState psi = embed(QuantumState::from_coeffs(w, c));

  Table t{"trajectory", {"side", "points", "t", "discrepancy"}, {}};
  std::vector<double> maxes;
  for (long s : sides) {
    auto curve = trajectory_approximation(psi, static_cast<int>(s), times);
    for (std::size_t k = 0; k < times.size(); ++k)
      t.rows.push_back({std::to_string(s), std::to_string(s * s), fmt(times[k]), fmt(curve.discrepancy[k])});
    r.add("side_" + std::to_string(s) + ".max_discrepancy", curve.max_discrepancy);
    maxes.push_back(curve.max_discrepancy);
  }
  r.tables.push_back(t);
  bool mono = true;
  for (std::size_t k = 1; k < maxes.size(); ++k) mono &= maxes[k] <= maxes[k - 1] + floor;

  // Ground state: radial symmetry makes the discrepancy time independent.
  ClassicalState g0 = embed(QuantumState::basis(w, 4, 0));
  auto gc = trajectory_approximation(g0, 8, times);
  double spread = *std::max_element(gc.discrepancy.begin(), gc.discrepancy.end()) -
                  *std::min_element(gc.discrepancy.begin(), gc.discrepancy.end());
  r.add("ground_state.time_spread", spread);
  r.add("non_increasing", mono);
  r.add("monotone_floor", floor);
  r.criterion("criterion_11_trajectory_refinement", mono && maxes.size() >= 2);
  return r;
}

Report holographic_exp(const Params& p, std::uint64_t seed) {
  Report r;
  const int f = static_cast<int>(p.get_int("f"));
  const double th = p.get_real("threshold");
  auto sc = mixing::holographic_scenario(f, seed);
  auto xy = mixing::coherence_classify(sc.states, sc.components, sc.u_sites, sc.x, sc.y, th);
  auto yz = mixing::coherence_classify(sc.states, sc.components, sc.u_sites, sc.y, sc.z, th);
  auto xz = mixing::coherence_classify(sc.states, sc.components, sc.u_sites, sc.x, sc.z, th);
  auto name = [](mixing::Coherence c) { return c == mixing::Coherence::Coherent ? "coherent" : "decoherent"; };
  r.add("threshold", th);
  r.add("pair_xy.ratio", xy.ratio);
  r.add("pair_xy.relation", name(xy.relation));
  r.add("pair_yz.ratio", yz.ratio);
  r.add("pair_yz.relation", name(yz.relation));
  r.add("pair_xz.ratio", xz.ratio);
  r.add("pair_xz.relation", name(xz.relation));
  r.criterion("holographic_non_transitive", xy.relation == mixing::Coherence::Coherent &&
                                                yz.relation == mixing::Coherence::Coherent &&
                                                xz.relation == mixing::Coherence::Decoherent);
  return r;
}

}  // namespace

Report run_experiment(const std::string& name, const Config& config, std::uint64_t seed) {
  const Schema& s = schema(name);
  Params p(s, config);
  static const std::map<std::string, std::function<Report(const Params&, std::uint64_t)>> dispatch = {
      {"haar-moments", haar_moments},
      {"det-moments", det_moments_exp},
      {"subsystem-density", subsystem_density_exp},
      {"nogo-singlet", nogo_singlet_exp},
      {"mixing-singlet", mixing_singlet_exp},
      {"action-minimize", action_minimize_exp},
      {"oscillator-intertwine", oscillator_exp},
      {"trajectory-approx", trajectory_exp},
      {"holographic-coherence", holographic_exp},
  };
  Report r = dispatch.at(name)(p, seed);
  r.experiment = name;
  r.seed = seed;
  std::vector<std::pair<std::string, std::string>> head;
  for (const auto& [k, v] : p.resolved()) head.emplace_back("param." + k, v);
  r.summary.insert(r.summary.begin(), head.begin(), head.end());
  return r;
}

std::string render_summary(const Report& report) {
  std::ostringstream out;
  out << "schema_version = 1\n";
  out << "experiment = " << report.experiment << "\n";
  out << "seed = " << report.seed << "\n";
  for (const auto& [k, v] : report.summary) out << k << " = " << v << "\n";
  for (const auto& [k, v] : report.criteria) out << "criterion." << k << " = " << (v ? "pass" : "fail") << "\n";
  out << "all_pass = " << (report.all_pass() ? "true" : "false") << "\n";
  return out.str();
}

std::string render_table(const Table& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

std::vector<fs::path> write_report(const Report& report, const fs::path& dir, bool overwrite) {
  std::vector<std::pair<fs::path, std::string>> files = {{dir / "summary.txt", render_summary(report)}};
  for (const auto& t : report.tables) files.push_back({dir / (t.name + ".csv"), render_table(t)});
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Errc::WriteFailure, "cannot create output directory '" + dir.string() + "'");
  if (!overwrite)
    for (const auto& [path, _] : files)
      require(!fs::exists(path), Errc::WriteFailure, "'" + path.string() + "' exists; pass --overwrite to replace it");
  std::vector<fs::path> out;
  for (const auto& [path, content] : files) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
    f.close();
    require(static_cast<bool>(f), Errc::WriteFailure, "failed writing '" + path.string() + "'");
    out.push_back(path);
  }
  return out;
}

}  // namespace fpl::experiments
