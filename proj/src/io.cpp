#include "spikelab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "spikelab/error.hpp"
#include "spikelab/toml.hpp"

namespace spikelab::io {

json to_json(const BulkMeasure& bulk) {
  json arr = json::array();
  for (const auto& a : bulk.atoms()) arr.push_back({{"t", a.t}, {"w", a.w}});
  return arr;
}

BulkMeasure bulk_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("bulk must be an array of {t, w}");
  std::vector<Atom> atoms;
  for (const auto& a : j) atoms.push_back({a.at("t").get<double>(), a.at("w").get<double>()});
  return BulkMeasure::from_atoms(std::move(atoms));
}

json to_json(const PopulationModel& model) {
  json spikes = json::array();
  for (const auto& g : model.spec.spikes) {
    spikes.push_back({{"alpha", g.alpha}, {"m", g.multiplicity}, {"ranks", g.indices}});
  }
  json out = {{"p", model.p()}, {"bulk", to_json(model.spec.bulk)}, {"spikes", spikes},
              {"case", to_string(model.kind)}};
  if (model.rho) out["rho"] = *model.rho;
  return out;
}

PopulationModel model_from_json(const json& j) {
  try {
    const int p = j.at("p").get<int>();
    const std::string kind = j.value("case", "custom");
    if (kind == "case1") return build_case1(p);
    if (kind == "case2") return build_case2(p, j.at("rho").get<double>());
    if (kind != "custom") throw InvalidArgument("unknown case '" + kind + "'");

    std::vector<std::pair<double, int>> spikes;
    int m_total = 0;
    for (const auto& s : j.value("spikes", json::array())) {
      const int m = s.value("m", 1);
      spikes.emplace_back(s.at("alpha").get<double>(), m);
      m_total += m;
    }
    const int bulk_count = p - m_total;
    if (bulk_count < 1) throw InvalidArgument("spike multiplicities leave no bulk");
    const BulkMeasure bulk = bulk_from_json(j.at("bulk"));
    std::vector<double> values;
    for (const auto& a : bulk.atoms()) {
      const double k = a.w * bulk_count;
      const auto count = static_cast<int>(std::lround(k));
      if (std::abs(k - count) > 1e-6) throw InvalidArgument("bulk masses are not multiples of 1/(p - M)");
      values.insert(values.end(), static_cast<std::size_t>(count), a.t);
    }
    if (static_cast<int>(values.size()) != bulk_count) throw InvalidArgument("bulk masses do not add up to p - M");
    auto spec = SpectrumSpec::make(std::move(values), spikes);
    return make_model(std::move(spec), MatrixXd::Identity(p, p), DesignCase::custom);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed model document: ") + e.what());
  }
}

json to_json(const PhaseValue& pv) {
  json out = {{"alpha", pv.alpha}, {"phi", pv.phi}, {"phi_prime", pv.phi_prime}, {"rho", pv.rho},
              {"regime", to_string(pv.regime)}};
  if (pv.critical_point) out["critical_point"] = *pv.critical_point;
  return out;
}

json to_json(const CltParams& params) {
  const double var_diag = omega_variance(params, true);
  json out = {{"alpha", params.alpha},
              {"c", params.c},
              {"phi", params.phi},
              {"phi_prime", params.phi_prime},
              {"m_under", params.m_under},
              {"m_under2", params.m_under2},
              {"m_tilde", params.m_tilde},
              {"kappa", params.kappa_s},
              {"theta", params.theta},
              {"nu", params.nu},
              {"beta_x", params.beta_x},
              {"multiplicity", params.multiplicity},
              {"regime", to_string(params.regime)},
              {"var_diag", var_diag},
              {"var_off", omega_variance(params, false)}};
  if (params.multiplicity == 1) out["sigma2"] = sigma_single(params);
  return out;
}

json to_json(const SpikeReport& report) {
  json dets = json::array();
  for (const auto& d : report.detections) {
    dets.push_back({{"rank", d.rank}, {"l", d.l}, {"alpha_hat", d.alpha_hat}, {"phi_hat", d.phi_hat},
                    {"ci", {d.lower, d.upper}}});
  }
  json groups = json::array();
  for (const auto& g : report.groups) groups.push_back({{"first_rank", g.first_rank}, {"multiplicity", g.multiplicity}});
  json out = {{"m_hat", report.m_hat}, {"detections", dets}, {"groups", groups}, {"refinements", report.refinements}};
  out["plug_in_atom"] = std::isfinite(report.plug_in_atom) ? json(report.plug_in_atom) : json(nullptr);
  return out;
}

SpikeReport report_from_json(const json& j) {
  SpikeReport r;
  try {
    r.m_hat = j.at("m_hat").get<int>();
    for (const auto& d : j.at("detections")) {
      r.detections.push_back({d.at("rank").get<int>(), d.at("l").get<double>(), d.at("alpha_hat").get<double>(),
                              d.at("phi_hat").get<double>(), d.at("ci").at(0).get<double>(),
                              d.at("ci").at(1).get<double>()});
    }
    for (const auto& g : j.value("groups", json::array())) {
      r.groups.push_back({g.at("first_rank").get<int>(), g.at("multiplicity").get<int>()});
    }
    r.refinements = j.value("refinements", 0);
    const auto& atom = j.value("plug_in_atom", json(nullptr));
    r.plug_in_atom = atom.is_null() ? std::nan("") : atom.get<double>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed report document: ") + e.what());
  }
  return r;
}

namespace {

json group_json(const GroupSummary& g) {
  json out = {{"group", g.group},
              {"alpha", g.alpha},
              {"multiplicity", g.multiplicity},
              {"center", g.center},
              {"count", g.samples.rows()},
              {"variance_defined", g.variance_defined},
              {"trace_variance", g.variance_defined ? json(g.trace_variance) : json(nullptr)}};
  out["mean"] = std::vector<double>(g.mean.data(), g.mean.data() + g.mean.size());
  json cov = json::array();
  for (Eigen::Index i = 0; i < g.covariance.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < g.covariance.cols(); ++k) row.push_back(g.covariance(i, k));
    cov.push_back(row);
  }
  out["covariance"] = g.variance_defined ? cov : json(nullptr);
  return out;
}

}  // namespace

json to_json(const EmpiricalSummary& s) {
  json out = {{"kind", s.kind}, {"distribution", to_string(s.dist)}, {"reps", s.reps}, {"completed", s.completed}};
  json groups = json::array();
  for (const auto& g : s.groups) groups.push_back(group_json(g));
  out["groups"] = groups;
  if (!s.reference_groups.empty()) {
    json ref = json::array();
    for (const auto& g : s.reference_groups) ref.push_back(group_json(g));
    out["reference_groups"] = ref;
  }
  if (s.detection) {
    const auto& d = *s.detection;
    json freq = json::object();
    for (const auto& [value, f] : d.frequency) freq[std::to_string(value)] = f;
    out["detection"] = {{"frequency", freq},
                        {"mode", d.mode()},
                        {"expected_ranks", d.expected_ranks},
                        {"location_accuracy", d.location_accuracy},
                        {"mean_alpha_hat", d.mean_alpha_hat},
                        {"alpha_hat_counts", d.alpha_hat_counts}};
  }
  if (!s.ks.empty()) {
    out["ks"] = s.ks;
    out["ks_critical"] = s.ks_critical;
    out["ks_pass"] = s.ks_pass;
  }
  json failures = json::array();
  for (const auto& f : s.failures) failures.push_back({{"rep", f.rep}, {"message", f.message}});
  out["failures"] = failures;
  return out;
}

MatrixXd read_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      const std::string tok = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      double v = 0;
      const char* first = tok.data() + (!tok.empty() && tok[0] == '+' ? 1 : 0);
      auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        std::ostringstream msg;
        msg << "line " << number << ", column " << col << ": non-numeric cell '" << tok << "'";
        throw InvalidArgument(msg.str());
      }
      row.push_back(v);
    }
    if (!line.empty() && line.back() == ',') {
      std::ostringstream msg;
      msg << "line " << number << ": empty trailing cell";
      throw InvalidArgument(msg.str());
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << "line " << number << ": expected " << rows.front().size() << " columns, found " << row.size();
      throw InvalidArgument(msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument("CSV input is empty");
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, const MatrixXd& m) {
  const auto old = out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  out.precision(old);
}

void write_gamma_csv(std::ostream& out, const EmpiricalSummary& summary) {
  const auto old = out.precision(17);
  out << "row,group,alpha,index,gamma\n";
  for (const auto& g : summary.groups) {
    for (Eigen::Index r = 0; r < g.samples.rows(); ++r) {
      for (Eigen::Index i = 0; i < g.samples.cols(); ++i) {
        out << r << ',' << g.group << ',' << g.alpha << ',' << i + 1 << ',' << g.samples(r, i) << '\n';
      }
    }
  }
  out.precision(old);
}

void write_histogram_csv(std::ostream& out, const EmpiricalSummary& summary) {
  const auto old = out.precision(17);
  out << "group,bin_lo,bin_hi,count\n";
  for (const auto& g : summary.groups) {
    for (std::size_t b = 0; b < g.histogram.counts.size(); ++b) {
      out << g.group << ',' << g.histogram.edges[b] << ',' << g.histogram.edges[b + 1] << ','
          << g.histogram.counts[b] << '\n';
    }
  }
  out.precision(old);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".toml") return toml::parse(buf.str());
  try {
    return json::parse(buf.str());
  } catch (const json::exception& e) {
    throw InvalidArgument("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace spikelab::io
