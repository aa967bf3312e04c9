// Table exports (CSV or JSON) for trajectories, controls and sweeps, and the
// control-file reader used to replay a stored schedule.

#pragma once

#include "lambdapump/model.hpp"
#include "lambdapump/reduced.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lambdapump {

enum class TableFormat { kCsv, kJson };

TableFormat parse_table_format(const std::string& name);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

using Cell = std::variant<double, std::string>;

/// Column-oriented export with the producing configuration attached. CSV
/// output starts with a `# ` comment line carrying the metadata as JSON.
struct Table {
  nlohmann::json meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void write(std::ostream& os, TableFormat format) const;
};

Table trajectory_table(const Trajectory& traj, const SystemParams& params,
                       nlohmann::json meta);
Table reduced_table(const std::vector<ReducedSample>& samples, nlohmann::json meta);
Table control_table(const ControlSignal& control, const SystemParams& params,
                    nlohmann::json meta);

/// Reads either a control table (`t_start,t_end,theta,...` columns) or a bare
/// list of angles, one per line, spread uniformly over `duration`. Lines
/// starting with '#' are ignored. Throws std::invalid_argument.
ControlSignal read_control(std::istream& is, std::optional<double> duration);

}  // namespace lambdapump
