#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "spikelab/clt.hpp"
#include "spikelab/estimate.hpp"
#include "spikelab/mc.hpp"
#include "spikelab/model.hpp"
#include "spikelab/spectral.hpp"

namespace spikelab::io {

using nlohmann::json;

json to_json(const BulkMeasure& bulk);
BulkMeasure bulk_from_json(const json& j);

/// {p, bulk:[{t,w}], spikes:[{alpha,m,ranks}], case, rho?}
json to_json(const PopulationModel& model);
/// case1/case2 are rebuilt from p (and rho); custom uses an identity basis.
PopulationModel model_from_json(const json& j);

json to_json(const PhaseValue& pv);
json to_json(const CltParams& params);

/// {m_hat, detections:[{rank, l, alpha_hat, phi_hat, ci:[lo,hi]}], groups, plug_in_atom}
json to_json(const SpikeReport& report);
SpikeReport report_from_json(const json& j);

json to_json(const EmpiricalSummary& summary);

/// Comma-separated numeric table. Throws InvalidArgument naming the line on
/// ragged rows or non-numeric cells.
MatrixXd read_csv(std::istream& in);
MatrixXd read_csv(const std::filesystem::path& path);

/// Row-major, 17 significant digits.
void write_csv(std::ostream& out, const MatrixXd& m);

/// One row per completed replication: rep, group, index, gamma.
void write_gamma_csv(std::ostream& out, const EmpiricalSummary& summary);
/// group, bin_lo, bin_hi, count.
void write_histogram_csv(std::ostream& out, const EmpiricalSummary& summary);

/// Writes to a temporary sibling and renames it over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// JSON file, or TOML when the extension is .toml.
json read_config(const std::filesystem::path& path);

}  // namespace spikelab::io
