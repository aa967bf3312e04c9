#include "lambdapump/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace lambdapump {

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::kCsv;
  if (name == "json") return TableFormat::kJson;
  throw std::invalid_argument("unknown output format '" + name + "' (csv|json)");
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

void Table::write(std::ostream& os, TableFormat format) const {
  if (format == TableFormat::kCsv) {
    os << "# " << meta.dump() << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) {
      os << (i ? "," : "") << columns[i];
    }
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        if (const double* d = std::get_if<double>(&row[i])) {
          os << format_number(*d);
        } else {
          os << std::get<std::string>(row[i]);
        }
      }
      os << '\n';
    }
    return;
  }
  nlohmann::json doc;
  doc["meta"] = meta;
  doc["columns"] = columns;
  nlohmann::json data = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) {
      if (const double* d = std::get_if<double>(&c)) {
        if (std::isfinite(*d)) {
          r.push_back(*d);
        } else {
          r.push_back(nullptr);
        }
      } else {
        r.push_back(std::get<std::string>(c));
      }
    }
    data.push_back(std::move(r));
  }
  doc["rows"] = std::move(data);
  os << doc.dump(1) << '\n';
}

Table trajectory_table(const Trajectory& traj, const SystemParams& params,
                       nlohmann::json meta) {
  Table t;
  t.meta = std::move(meta);
  t.columns = {"t", "rho11", "rho22", "rho33", "x4", "x5", "x6", "theta", "omega_p", "omega_s"};
  t.rows.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const FullState& s = traj.states[i];
    const double th = traj.theta[i];
    t.rows.push_back({traj.time[i], s.x1, s.x2, s.x3, s.x4, s.x5, s.x6, th,
                      params.omega0 * std::sin(th), params.omega0 * std::cos(th)});
  }
  return t;
}

Table reduced_table(const std::vector<ReducedSample>& samples, nlohmann::json meta) {
  Table t;
  t.meta = std::move(meta);
  t.columns = {"tprime", "x", "y", "theta"};
  for (const auto& s : samples) {
    t.rows.push_back({s.tprime, s.state.x, s.state.y, s.state.theta});
  }
  return t;
}

Table control_table(const ControlSignal& control, const SystemParams& params,
                    nlohmann::json meta) {
  Table t;
  t.meta = std::move(meta);
  t.columns = {"t_start", "t_end", "theta", "omega_p", "omega_s"};
  for (std::size_t k = 0; k < control.intervals(); ++k) {
    t.rows.push_back({control.grid()[k], control.grid()[k + 1], control.theta()[k],
                      control.omega_p(k, params.omega0), control.omega_s(k, params.omega0)});
  }
  return t;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("control file: cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

ControlSignal read_control(std::istream& is, std::optional<double> duration) {
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    if (rows.empty() && header.empty() && !fields.empty() &&
        (std::isalpha(static_cast<unsigned char>(fields[0][0])) || fields[0][0] == '_')) {
      header = std::move(fields);
      continue;
    }
    std::vector<double> r;
    for (const auto& f : fields) r.push_back(parse_double(f));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::invalid_argument("control file has no data rows");

  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto ts = column("t_start");
  const auto te = column("t_end");
  const auto th = column("theta");
  if (ts && te && th) {
    std::vector<double> grid{0.0};
    std::vector<double> theta;
    for (const auto& r : rows) {
      if (r.size() != header.size()) throw std::invalid_argument("control file: ragged row");
      if (r[*ts] != grid.back()) {
        throw std::invalid_argument("control file: intervals must be contiguous from t = 0");
      }
      grid.push_back(r[*te]);
      theta.push_back(r[*th]);
    }
    return ControlSignal(std::move(grid), std::move(theta));
  }
  const std::size_t col = th ? *th : 0;
  if (!duration) {
    throw std::invalid_argument("a bare angle list needs an explicit duration");
  }
  std::vector<double> theta;
  for (const auto& r : rows) {
    if (col >= r.size()) throw std::invalid_argument("control file: missing theta column");
    theta.push_back(r[col]);
  }
  return ControlSignal::uniform(*duration, std::move(theta));
}

}  // namespace lambdapump
