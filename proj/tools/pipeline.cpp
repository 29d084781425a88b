#include "fpl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "fpl/error.hpp"
#include "fpl/parallel.hpp"

namespace fpl {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::map<std::string, double> fixed_params(const Dataset& d) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : d.fixed.items()) {
    if (k != "period") out[k] = v.get<double>();
  }
  return out;
}

std::span<const Spinor> slice(const FloquetSolution& sol, int m) {
  const auto n = static_cast<std::size_t>(sol.k_points());
  return {sol.states_minus.data() + m * n, n};
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

const std::vector<std::string>& invariant_fields() {
  static const std::vector<std::string> f{"w0",   "w_pi",     "nu0",        "nu_half", "chern", "link",
                                          "nu_value", "nu_modulus", "v0", "v_pi",  "c_h"};
  return f;
}

}  // namespace

Dataset generate(const RunConfig& c) {
  const auto pts = sample_points(c);
  Dataset d;
  d.model_tag = c.model;
  for (const auto& a : c.sweep) d.param_names.push_back(a.name);
  d.fixed = nlohmann::json::object();
  for (const auto& [k, v] : c.fixed) d.fixed[k] = v;
  d.fixed["period"] = c.period;
  d.grid = c.grid;
  d.tolerances = {{"gap_tol", c.gap_tol}, {"units", "pi/T"}};
  d.config_hash = config_hash(c);
  d.timestamp = utc_timestamp();
  d.samples.resize(pts.size());
  d.fields.resize(pts.size());

  SolveOptions opt;
  opt.gap_tol = c.gap_tol;
  opt.throw_on_gap = false;
  spdlog::info("generating {} samples of {} on nk={} nt={}", pts.size(), c.model, c.grid.nk, c.grid.nt);
  parallel_for(pts.size(), c.jobs, [&](std::size_t i) {
    const DriveModel m = make_model(c.model, d.param_names, pts[i], c.fixed, c.period);
    const FloquetSolution sol = floquet_solve(m, c.grid, opt);
    SampleMeta& s = d.samples[i];
    s.id = static_cast<std::int64_t>(i);
    s.params = pts[i];
    s.excluded = sol.gap_closed;
    s.gap0 = sol.gap0;
    s.gap_pi = sol.gap_pi;
    FfoField f = ffo(sol);
    f.sample_id = s.id;
    f.params = s.params;
    d.fields[i] = std::move(f);
  });
  const auto excluded = std::count_if(d.samples.begin(), d.samples.end(), [](const SampleMeta& s) { return s.excluded; });
  if (excluded > 0) spdlog::warn("{} samples excluded (gap below tolerance)", excluded);
  return d;
}

double dataset_period(const Dataset& d) { return d.fixed.value("period", 1.0); }

DriveModel sample_model(const Dataset& d, const SampleMeta& s) {
  return make_model(d.model_tag, d.param_names, s.params, fixed_params(d), dataset_period(d));
}

InvariantRecord compute_invariants(const DriveModel& m, const GridSpec& g, const InvariantOptions& opt) {
  InvariantRecord r;
  SolveOptions so;
  so.gap_tol = opt.gap_tol;
  if (std::holds_alternative<Aiii>(m)) {
    const FloquetSolution sol = floquet_solve(m, g, so);
    const GapWindings w = aiii_gap_windings(sol);
    r.w0 = w.w0;
    r.w_pi = w.w_pi;
    r.nu0 = winding_equatorial(slice(sol, 0)).value;
    r.nu_half = winding_equatorial(slice(sol, g.nt / 2)).value;
  } else if (std::holds_alternative<DClass>(m)) {
    const FloquetSolution sol = floquet_solve(m, g, so);
    const DClassZ2 z = dclass_invariants(sol);
    r.v0 = z.v0;
    r.v_pi = z.v_pi;
    r.c_h = z.c_h;
  } else {
    const int w0 = winding3(m, g.nk, 0.0).value;
    const int wpi = winding3(m, g.nk, kPi).value;
    r.w0 = w0;
    r.w_pi = wpi;
    const FloquetSolution sol = floquet_solve(m, g, so);
    const FfoField f = ffo(sol);
    const int c = chern_fixed_t(f, 0).value;
    r.chern = c;
    if (opt.link && c == 0) {
      const auto field = field_3d(f);
      const std::array<int, 3> shape{g.nk, g.nk, g.nt};
      const double h = std::sqrt(0.5);
      // Targets: the south pole and theta = pi, phi = 3 pi / 4.
      const auto a = preimage_loops(field, shape, {0.0, 0.0, -1.0});
      const auto b = preimage_loops(field, shape, {-h, 0.0, -h});
      r.link = linking_number(a, b, {double(g.nk), double(g.nk), double(g.nt)}).value;
    }
    const Residue nu = pontryagin_from_gaps(w0, wpi);
    r.nu_value = nu.value;
    r.nu_modulus = nu.modulus;
  }
  return r;
}

int annotate(Dataset& d, int jobs, const InvariantOptions& opt) {
  std::vector<int> failed(d.samples.size(), 0);
  parallel_for(d.samples.size(), jobs, [&](std::size_t i) {
    SampleMeta& s = d.samples[i];
    if (s.excluded) {
      s.invariants = nullptr;
      return;
    }
    try {
      s.invariants = to_json(compute_invariants(sample_model(d, s), d.grid, opt));
    } catch (const std::exception& e) {
      s.invariants = {{"error", e.what()}};
      failed[i] = 1;
    }
  });
  const int n = std::accumulate(failed.begin(), failed.end(), 0);
  if (n > 0) spdlog::warn("{} samples failed invariant computation", n);
  return n;
}

ClusterReport cluster_dataset(const Dataset& d, const ClusterSettings& s) {
  ClusterReport r;
  r.epsilon = s.epsilon;
  r.options = s.options;
  r.edge_threshold = s.edge_threshold;
  std::vector<FfoField> kept;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    if (d.samples[i].excluded) continue;
    r.ids.push_back(d.samples[i].id);
    kept.push_back(d.fields[i]);
  }
  if (kept.empty()) throw Error(ErrorKind::GridMismatch, "no non-excluded samples to cluster");
  if (kept.size() == 1) spdlog::warn("single sample: trivially one cluster");

  const KernelImpl impl = s.impl == KernelImpl::Auto ? (avx2_available() ? KernelImpl::Avx2 : KernelImpl::Scalar) : s.impl;
  r.kernel_impl = std::string(kernel_impl_name(impl));
  const auto t0 = std::chrono::steady_clock::now();
  const KernelMatrix k = kernel_matrix(kept, s.epsilon, s.jobs, impl);
  r.kernel_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  spdlog::info("kernel {}x{} ({}) in {:.2f} s", k.n, k.n, r.kernel_impl, r.kernel_seconds);

  const DiffusionSpectrum spec = diffusion_spectrum(k);
  r.eigenvalues = spec.eigenvalues;
  r.oracle = components_oracle(k, s.edge_threshold);
  try {
    r.diffusion = cluster(spec, s.options);
    r.oracle_agrees = same_partition(r.diffusion->labels, r.oracle.labels);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::AmbiguousSpectrum) throw;
    r.ambiguity = e.what();
  }
  const int n = static_cast<int>(kept.size());
  r.embedding.assign(n, {0.0, 0.0});
  for (int c = 1; c <= 2 && c < n; ++c) {
    const double w = std::pow(spec.eigenvalues(c), s.options.ell);
    for (int i = 0; i < n; ++i) r.embedding[i][c - 1] = w * spec.right(i, c);
  }
  return r;
}

nlohmann::json report_json(const ClusterReport& r) {
  nlohmann::json j;
  j["ids"] = r.ids;
  j["epsilon"] = r.epsilon;
  j["dominance_threshold"] = r.options.dominance_threshold;
  j["ell"] = r.options.ell;
  j["cutoff_fraction"] = r.options.cutoff_fraction;
  j["edge_threshold"] = r.edge_threshold;
  j["kernel_impl"] = r.kernel_impl;
  j["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  if (r.diffusion) {
    j["n_clusters"] = r.diffusion->n_clusters;
    j["dominant_count"] = r.diffusion->dominant_count;
    j["labels"] = r.diffusion->labels;
  } else {
    j["ambiguous"] = r.ambiguity;
  }
  j["oracle"] = {{"n_clusters", r.oracle.n_clusters}, {"labels", r.oracle.labels}, {"agrees", r.oracle_agrees}};
  nlohmann::json emb = nlohmann::json::array();
  for (const auto& e : r.embedding) emb.push_back({e[0], e[1]});
  j["embedding"] = emb;
  return j;
}

ClusterReport report_from_json(const nlohmann::json& j) {
  ClusterReport r;
  r.ids = j.at("ids").get<std::vector<std::int64_t>>();
  r.epsilon = j.value("epsilon", 0.0);
  const auto ev = j.at("eigenvalues").get<std::vector<double>>();
  r.eigenvalues = Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  if (j.contains("labels")) {
    ClusterAssignment a;
    a.labels = j.at("labels").get<std::vector<int>>();
    a.n_clusters = j.at("n_clusters");
    a.dominant_count = j.value("dominant_count", a.n_clusters);
    r.diffusion = a;
  } else {
    r.ambiguity = j.value("ambiguous", "");
  }
  if (j.contains("oracle")) {
    r.oracle.method = ClusterMethod::ConnectedComponents;
    r.oracle.labels = j["oracle"].at("labels").get<std::vector<int>>();
    r.oracle.n_clusters = j["oracle"].at("n_clusters");
    r.oracle_agrees = j["oracle"].value("agrees", false);
  }
  return r;
}

std::vector<DiagramRow> merge_rows(const Dataset& d, const ClusterReport& r) {
  std::map<std::int64_t, int> label_of;
  const std::vector<int>& labels = r.diffusion ? r.diffusion->labels : r.oracle.labels;
  if (labels.size() != r.ids.size()) throw Error(ErrorKind::IdMismatch, "report labels and ids differ in length");
  for (std::size_t i = 0; i < r.ids.size(); ++i) label_of[r.ids[i]] = labels[i];

  std::vector<DiagramRow> rows;
  std::set<std::int64_t> seen;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const SampleMeta& s = d.samples[i];
    DiagramRow row;
    row.id = s.id;
    row.params = s.params;
    row.excluded = s.excluded;
    row.gap0 = s.gap0;
    row.gap_pi = s.gap_pi;
    row.invariants = s.invariants;
    const auto it = label_of.find(s.id);
    if (it != label_of.end()) {
      if (s.excluded) throw Error(ErrorKind::IdMismatch, "report labels excluded sample " + std::to_string(s.id));
      row.label = it->second;
      seen.insert(s.id);
    } else if (!s.excluded) {
      throw Error(ErrorKind::IdMismatch, "sample " + std::to_string(s.id) + " has no cluster label");
    }
    if (d.model_tag == "dclass" && d.grid.nk % 2 == 0) {
      const FfoField& f = d.fields[i];
      row.ny_sign_0 = sign_of(f.ny[0]);
      row.ny_sign_pi = sign_of(f.ny[d.grid.nk / 2]);
    }
    rows.push_back(std::move(row));
  }
  if (seen.size() != label_of.size()) throw Error(ErrorKind::IdMismatch, "report names samples missing from dataset");
  return rows;
}

std::string invariant_key(const Dataset& d, const DiagramRow& row) {
  if (row.invariants.is_null() || row.invariants.contains("error")) return "";
  std::ostringstream os;
  if (d.model_tag == "dclass") {
    os << "v0=" << row.invariants.value("v0", 0) << " v_pi=" << row.invariants.value("v_pi", 0)
       << " ny0=" << (row.ny_sign_0 < 0 ? "-" : "+") << " nypi=" << (row.ny_sign_pi < 0 ? "-" : "+");
    return os.str();
  }
  bool first = true;
  for (const auto& f : invariant_fields()) {
    if (!row.invariants.contains(f)) continue;
    os << (first ? "" : " ") << f << "=" << row.invariants[f].get<int>();
    first = false;
  }
  return os.str();
}

Consistency check_consistency(const Dataset& d, const std::vector<DiagramRow>& rows) {
  std::map<int, std::map<std::string, int>> keys;
  Consistency c;
  for (const auto& row : rows) {
    if (row.excluded || row.label < 0) continue;
    const std::string k = invariant_key(d, row);
    if (k.empty()) {
      ++c.unannotated;
      continue;
    }
    keys[row.label][k] += 1;
  }
  c.clusters = static_cast<int>(keys.size());
  for (const auto& [label, counts] : keys) {
    std::ostringstream os;
    os << "cluster " << label << ":";
    for (const auto& [k, n] : counts) os << " [" << k << "] x" << n;
    if (counts.size() > 1) ++c.disagreeing_clusters;
    c.detail.push_back(os.str());
  }
  return c;
}

std::string rows_csv(const Dataset& d, const std::vector<DiagramRow>& rows) {
  std::ostringstream os;
  os << "id";
  for (const auto& n : d.param_names) os << "," << n;
  os << ",excluded,label,gap0,gap_pi";
  for (const auto& f : invariant_fields()) os << "," << f;
  if (d.model_tag == "dclass") os << ",ny_sign_0,ny_sign_pi";
  os << ",error\r\n";
  for (const auto& r : rows) {
    os << r.id;
    for (double p : r.params) os << "," << num(p);
    os << "," << (r.excluded ? 1 : 0) << "," << r.label << "," << num(r.gap0) << "," << num(r.gap_pi);
    for (const auto& f : invariant_fields()) {
      os << ",";
      if (r.invariants.is_object() && r.invariants.contains(f)) os << r.invariants[f].get<int>();
    }
    if (d.model_tag == "dclass") os << "," << r.ny_sign_0 << "," << r.ny_sign_pi;
    os << ",";
    if (r.invariants.is_object() && r.invariants.contains("error")) os << csv_field(r.invariants["error"]);
    os << "\r\n";
  }
  return os.str();
}

std::string invariants_csv(const Dataset& d) {
  std::ostringstream os;
  os << "id";
  for (const auto& n : d.param_names) os << "," << n;
  os << ",excluded";
  for (const auto& f : invariant_fields()) os << "," << f;
  os << ",error\r\n";
  for (const auto& s : d.samples) {
    os << s.id;
    for (double p : s.params) os << "," << num(p);
    os << "," << (s.excluded ? 1 : 0);
    for (const auto& f : invariant_fields()) {
      os << ",";
      if (s.invariants.is_object() && s.invariants.contains(f)) os << s.invariants[f].get<int>();
    }
    os << ",";
    if (s.invariants.is_object() && s.invariants.contains("error")) os << csv_field(s.invariants["error"]);
    os << "\r\n";
  }
  return os.str();
}

std::string eigenvalues_csv(const ClusterReport& r) {
  std::ostringstream os;
  os << "index,eigenvalue\r\n";
  for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i) os << i << "," << num(r.eigenvalues(i)) << "\r\n";
  return os.str();
}

std::string diagram_svg(const Dataset& d, const std::vector<DiagramRow>& rows) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
                                  "#8c6d31", "#843c39", "#7b4173", "#3182bd"};
  constexpr int kPalette = sizeof(palette) / sizeof(palette[0]);
  const double W = 480.0;
  const double left = 60.0;
  const double top = 20.0;
  const std::size_t dims = d.param_names.size();
  const double H = dims >= 2 ? 480.0 : 60.0;

  // Parameter extents and cell sizes from the distinct sample coordinates.
  // Random samples get square cells sized for an equivalent regular grid.
  std::array<double, 2> lo{0.0, 0.0}, hi{1.0, 1.0}, cell{1.0, 1.0};
  std::array<std::size_t, 2> distinct{1, 1};
  for (std::size_t a = 0; a < std::min<std::size_t>(dims, 2); ++a) {
    std::set<double> vals;
    for (const auto& r : rows) vals.insert(r.params[a]);
    lo[a] = *vals.begin();
    hi[a] = *vals.rbegin();
    distinct[a] = vals.size();
  }
  const bool regular = distinct[0] * distinct[1] == rows.size();
  const double per_axis = dims >= 2 ? std::sqrt(double(rows.size())) : double(rows.size());
  for (std::size_t a = 0; a < std::min<std::size_t>(dims, 2); ++a) {
    const double n = regular ? double(distinct[a]) : per_axis;
    cell[a] = n > 1.0 ? (hi[a] - lo[a]) / (n - 1.0) : 1.0;
    if (hi[a] == lo[a]) {
      hi[a] = lo[a] + 1.0;
      cell[a] = 1.0;
    }
  }
  const auto sx = [&](double v) { return left + (v - lo[0] + 0.5 * cell[0]) / (hi[0] - lo[0] + cell[0]) * W; };
  const auto sy = [&](double v) { return top + H - (v - lo[1] + 0.5 * cell[1]) / (hi[1] - lo[1] + cell[1]) * H; };
  const double cw = cell[0] / (hi[0] - lo[0] + cell[0]) * W;
  const double ch = dims >= 2 ? cell[1] / (hi[1] - lo[1] + cell[1]) * H : H;

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  const double total_h = top + H + 60.0 + 18.0 * 20;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + W + 20 << "\" height=\"" << total_h
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  std::map<int, std::vector<const DiagramRow*>> members;
  for (const auto& r : rows) {
    const double x = sx(r.params.empty() ? 0.0 : r.params[0]) - 0.5 * cw;
    const double y = dims >= 2 ? sy(r.params[1]) - 0.5 * ch : top;
    const char* fill = r.label < 0 ? "#dddddd" : palette[r.label % kPalette];
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"" << fill
       << "\"/>\n";
    if (r.label >= 0) members[r.label].push_back(&r);
  }
  // Cluster tags at the centroid; D class adds the k = 0 orientation mark.
  for (const auto& [label, ms] : members) {
    double cx = 0.0;
    double cy = 0.0;
    for (const auto* r : ms) {
      cx += sx(r->params.empty() ? 0.0 : r->params[0]);
      cy += dims >= 2 ? sy(r->params[1]) : top + 0.5 * H;
    }
    cx /= ms.size();
    cy /= ms.size();
    std::string tag = std::to_string(label);
    if (d.model_tag == "dclass") tag += ms.front()->ny_sign_0 < 0 ? " ↓" : " ↑";
    os << "<text x=\"" << cx << "\" y=\"" << cy << "\" text-anchor=\"middle\" fill=\"#000000\">" << tag << "</text>\n";
  }
  // Axes labels.
  os << "<text x=\"" << left + 0.5 * W << "\" y=\"" << top + H + 16 << "\" text-anchor=\"middle\">"
     << (dims ? d.param_names[0] : std::string("sample")) << " [pi/T] " << num(lo[0]) << " .. " << num(hi[0])
     << "</text>\n";
  if (dims >= 2) {
    os << "<text x=\"14\" y=\"" << top + 0.5 * H << "\" transform=\"rotate(-90 14 " << top + 0.5 * H
       << ")\" text-anchor=\"middle\">" << d.param_names[1] << " [pi/T] " << num(lo[1]) << " .. " << num(hi[1])
       << "</text>\n";
  }
  // Legend: one line per cluster with its invariant keys.
  double ly = top + H + 40;
  for (const auto& [label, ms] : members) {
    std::map<std::string, int> keys;
    for (const auto* r : ms) keys[invariant_key(d, *r)] += 1;
    std::string text;
    for (const auto& [k, n] : keys) text += (text.empty() ? "" : "; ") + (k.empty() ? std::string("unannotated") : k);
    os << "<rect x=\"" << left << "\" y=\"" << ly - 10 << "\" width=\"12\" height=\"12\" fill=\""
       << palette[label % kPalette] << "\"/>\n";
    os << "<text x=\"" << left + 18 << "\" y=\"" << ly << "\">cluster " << label << " (" << ms.size()
       << "): " << text << "</text>\n";
    ly += 18;
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + p.string());
}

}  // namespace fpl
