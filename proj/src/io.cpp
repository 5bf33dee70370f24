#include "cargoflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cargoflow/toml_lite.hpp"

namespace cargoflow {
namespace io {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  return in;
}

// Splits a CSV line on commas; no quoting (the formats are purely numeric
// apart from headers).
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& context) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad number '" + s + "' in " + context);
  }
}

int resolve_state(const toml::Value& v, const std::vector<std::string>& labels,
                  const std::string& origin) {
  if (v.kind == toml::Value::Kind::Number) {
    int idx = static_cast<int>(v.num);
    if (idx < 0 || idx >= static_cast<int>(labels.size()) || idx != v.num)
      throw IoError(origin + ": state index out of range");
    return idx;
  }
  if (v.kind == toml::Value::Kind::String) {
    for (size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == v.str) return static_cast<int>(i);
    throw IoError(origin + ": unknown state label '" + v.str + "'");
  }
  throw IoError(origin + ": state must be a label or an index");
}

}  // namespace

ModelSpec parse_model(const std::string& text, const std::string& origin) {
  toml::Document doc = toml::parse(text, origin);
  auto states_it = doc.table_arrays.find("states");
  if (states_it == doc.table_arrays.end() || states_it->second.empty())
    throw IoError(origin + ": model file needs at least one [[states]] entry");
  const auto& states = states_it->second;

  ModelSpec m;
  m.n_states = static_cast<int>(states.size());
  m.speeds.resize(m.n_states);
  m.diffusivities.resize(m.n_states);
  m.rates = Eigen::MatrixXd::Zero(m.n_states, m.n_states);
  for (int j = 0; j < m.n_states; ++j) {
    const auto& s = states[j];
    auto label = toml::get_string_opt(s, "label");
    m.state_labels.push_back(label.value_or("state" + std::to_string(j)));
    m.speeds(j) = toml::get_number_or(s, "speed", 0.0);
    m.diffusivities(j) = toml::get_number_or(s, "diffusivity", 0.0);
    if (toml::get_bool_or(s, "bound", false)) m.bound_states.push_back(j);
  }
  {
    std::set<std::string> seen(m.state_labels.begin(), m.state_labels.end());
    if (seen.size() != m.state_labels.size())
      throw IoError(origin + ": duplicate state labels");
  }

  auto rates_it = doc.table_arrays.find("rates");
  if (rates_it == doc.table_arrays.end())
    throw IoError(origin + ": model file needs [[rates]] entries");
  std::set<std::pair<int, int>> seen_pairs;
  for (const auto& r : rates_it->second) {
    auto from_it = r.find("from");
    auto to_it = r.find("to");
    if (from_it == r.end() || to_it == r.end())
      throw IoError(origin + ": rate entry needs 'from' and 'to'");
    int from = resolve_state(from_it->second, m.state_labels, origin);
    int to = resolve_state(to_it->second, m.state_labels, origin);
    if (from == to) throw IoError(origin + ": self-rates are not allowed");
    if (!seen_pairs.insert({from, to}).second) {
      std::ostringstream msg;
      msg << origin << ": duplicate rate (" << m.state_labels[from] << " -> "
          << m.state_labels[to] << ")";
      throw IoError(msg.str());
    }
    double rate = toml::get_number(r, "rate");
    if (rate < 0) throw IoError(origin + ": negative rate");
    m.rates(to, from) = rate;
  }
  for (int j = 0; j < m.n_states; ++j) m.rates(j, j) = -m.rates.col(j).sum();

  require_valid(m);
  return m;
}

ModelSpec load_model(const std::string& path) {
  std::stringstream buf;
  buf << open_in(path).rdbuf();
  return parse_model(buf.str(), path);
}

FrapProtocol parse_protocol(const std::string& text, const std::string& origin) {
  toml::Document doc = toml::parse(text, origin);
  auto need = [&](const char* name) -> const toml::Table& {
    auto it = doc.tables.find(name);
    if (it == doc.tables.end())
      throw IoError(origin + ": protocol needs a [" + std::string(name) + "] table");
    return it->second;
  };
  FrapProtocol p;
  const auto& spot = need("spot");
  p.spot_center = {toml::get_number(spot, "cx"), toml::get_number(spot, "cy")};
  p.spot_radius = toml::get_number(spot, "radius");

  const auto& post = need("postbleach");
  p.bleach_depth = toml::get_number_or(post, "depth", 0.0);
  if (auto prof = toml::get_string_opt(post, "profile")) {
    auto in = open_in(*prof);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto parts = split_csv(line);
      if (first && parts.size() >= 2 && !std::isdigit(parts[0][0]) &&
          parts[0][0] != '-' && parts[0][0] != '.') {
        first = false;
        continue;  // header row
      }
      first = false;
      if (parts.size() < 2) throw IoError(*prof + ": need (radius, level) rows");
      p.postbleach_profile.emplace_back(to_double(parts[0], *prof),
                                        to_double(parts[1], *prof));
    }
  }

  const auto& obs = need("observe");
  if (obs.count("times")) {
    p.times = toml::get_array(obs, "times");
  } else {
    double t0 = toml::get_number(obs, "t_start");
    double t1 = toml::get_number(obs, "t_end");
    int count = static_cast<int>(toml::get_number(obs, "count"));
    if (count < 2) throw IoError(origin + ": observe.count must be >= 2");
    for (int i = 0; i < count; ++i)
      p.times.push_back(t0 + (t1 - t0) * i / (count - 1));
  }

  const auto& dom = need("domain");
  p.domain = {toml::get_number(dom, "x0"), toml::get_number(dom, "y0"),
              toml::get_number(dom, "x1"), toml::get_number(dom, "y1")};
  p.nx = static_cast<int>(toml::get_number(dom, "nx"));
  p.ny = static_cast<int>(toml::get_number(dom, "ny"));
  p.check();
  return p;
}

FrapProtocol load_protocol(const std::string& path) {
  std::stringstream buf;
  buf << open_in(path).rdbuf();
  return parse_protocol(buf.str(), path);
}

RhoProfile load_rho_profile(const std::string& path) {
  auto in = open_in(path);
  std::vector<double> xs, values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto parts = split_csv(line);
    if (parts.size() < 2) throw IoError(path + ": need (x, rho) rows");
    if (!std::isdigit(parts[0][0]) && parts[0][0] != '-' && parts[0][0] != '.')
      continue;  // header
    xs.push_back(to_double(parts[0], path));
    values.push_back(to_double(parts[1], path));
  }
  return RhoProfile::from_samples(std::move(xs), std::move(values));
}

std::vector<FilamentSegment> read_segments_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<FilamentSegment> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto parts = split_csv(line);
    if (!parts.empty() && parts[0] == "x1") continue;  // header
    if (parts.size() < 6) throw IoError(path + ": need 6 columns per segment");
    FilamentSegment s;
    s.a = {to_double(parts[0], path), to_double(parts[1], path)};
    s.b = {to_double(parts[2], path), to_double(parts[3], path)};
    s.orientation = {to_double(parts[4], path), to_double(parts[5], path)};
    out.push_back(s);
  }
  return out;
}

void write_segments_csv(const std::string& path,
                        const std::vector<FilamentSegment>& segments) {
  auto out = open_out(path);
  out << "# cargoflow-csv-v1 segments\n";
  out << "x1,y1,x2,y2,ox,oy\n";
  for (const auto& s : segments) {
    out << format_double(s.a.x) << ',' << format_double(s.a.y) << ','
        << format_double(s.b.x) << ',' << format_double(s.b.y) << ','
        << format_double(s.orientation.x) << ',' << format_double(s.orientation.y)
        << '\n';
  }
}

void write_field(const std::string& path, const GridSpec& grid,
                 const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != grid.cells())
    throw IoError("write_field: value count does not match grid");
  auto out = open_out(path);
  out << "# cargoflow-field-v1\n";
  out << grid.nx << ' ' << grid.ny << ' ' << format_double(grid.dx) << ' '
      << format_double(grid.dy) << ' ' << format_double(grid.x0) << ' '
      << format_double(grid.y0) << '\n';
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (ix) out << ' ';
      out << format_double(values[grid.index(ix, iy)]);
    }
    out << '\n';
  }
}

std::pair<GridSpec, std::vector<double>> read_field(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# cargoflow-field-v1", 0) != 0)
    throw IoError(path + ": not a cargoflow field dump");
  GridSpec g;
  in >> g.nx >> g.ny >> g.dx >> g.dy >> g.x0 >> g.y0;
  if (!in || g.nx <= 0 || g.ny <= 0) throw IoError(path + ": bad field header");
  std::vector<double> values(g.cells());
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      if (!(in >> values[g.index(ix, iy)]))
        throw IoError(path + ": truncated field data");
  return {g, std::move(values)};
}

RecoveryCurve read_recovery_csv(const std::string& path) {
  auto in = open_in(path);
  RecoveryCurve c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto parts = split_csv(line);
    if (!parts.empty() && (parts[0] == "time_s" || parts[0] == "time")) continue;
    if (parts.size() < 2) throw IoError(path + ": need (time, intensity[, weight])");
    c.times.push_back(to_double(parts[0], path));
    c.values.push_back(to_double(parts[1], path));
    if (parts.size() >= 3) c.weights.push_back(to_double(parts[2], path));
  }
  if (!c.weights.empty() && c.weights.size() != c.times.size())
    throw IoError(path + ": weight column is incomplete");
  if (c.times.empty()) throw IoError(path + ": no data rows");
  return c;
}

void write_recovery_csv(const std::string& path, const RecoveryCurve& curve) {
  auto out = open_out(path);
  out << "# cargoflow-csv-v1 recovery\n";
  out << (curve.weights.empty() ? "time_s,intensity\n"
                                : "time_s,intensity,weight\n");
  for (size_t i = 0; i < curve.times.size(); ++i) {
    out << format_double(curve.times[i]) << ',' << format_double(curve.values[i]);
    if (!curve.weights.empty()) out << ',' << format_double(curve.weights[i]);
    out << '\n';
  }
}

void write_cycles_csv(const std::string& path,
                      const std::vector<CycleSample>& cycles) {
  auto out = open_out(path);
  out << "# cargoflow-csv-v1 cycles\n";
  out << "delta_t,delta_x,n_steps\n";
  for (const auto& c : cycles) {
    out << format_double(c.delta_t) << ',' << format_double(c.delta_x) << ','
        << c.n_steps << '\n';
  }
}

void write_table_csv(const std::string& path, const std::string& kind,
                     const std::vector<std::string>& columns,
                     const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  out << "# cargoflow-csv-v1 " << kind << '\n';
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out << ',';
    out << columns[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw IoError("write_table_csv: ragged row in " + path);
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

}  // namespace io
}  // namespace cargoflow
