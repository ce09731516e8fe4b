#pragma once

// Power-system case data: network types and a reader/writer for the plain-text
// MATPOWER case subset (bus, branch, gen, gencost; polynomial cost model 2).
//
// All MW quantities are stored in per-unit on the case's base_mva. Cost
// coefficients stay in the file's units ($/MWh, $/MW^2h, $/h).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dcdual/errors.hpp"

namespace dcdual {

struct Bus {
  int id = 0;             // contiguous index 0..n_b-1
  long file_id = 0;       // bus number as written in the case file
  bool is_slack = false;
  double load = 0.0;      // active demand, p.u.

  bool operator==(const Bus&) const = default;
};

struct Line {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;    // p.u., as read
  double susceptance = 0.0;  // 1 / reactance
  double flow_limit = 0.0;   // symmetric magnitude, p.u.

  bool operator==(const Line&) const = default;
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;      // p.u.
  double p_max = 0.0;      // p.u.
  double cost_lin = 0.0;   // $/MWh
  double cost_quad = 0.0;  // $/MW^2h

  bool operator==(const Generator&) const = default;
};

struct PowerNetwork {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  double cost_offset = 0.0;  // sum of constant cost terms, $/h

  int slack_index() const {
    for (const auto& b : buses)
      if (b.is_slack) return b.id;
    return -1;
  }
  std::size_t num_buses() const { return buses.size(); }
  std::size_t num_lines() const { return lines.size(); }
  std::size_t num_generators() const { return generators.size(); }

  bool operator==(const PowerNetwork&) const = default;
};

struct ParseOptions {
  /// Bus number (file numbering) to force as the single slack bus.
  std::optional<long> slack_bus_id;
};

struct NetworkStats {
  std::size_t num_buses = 0;
  std::size_t num_lines = 0;
  std::size_t num_generators = 0;
  double total_load_mw = 0.0;
  double total_capacity_mw = 0.0;
  bool capacity_sufficient = true;
  std::vector<std::string> warnings;
};

namespace detail {

using Table = std::vector<std::vector<double>>;

inline std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char ch : text) {
    if (ch == '\n') in_comment = false;
    if (ch == '%' || ch == '#') in_comment = true;
    if (!in_comment) out.push_back(ch);
  }
  return out;
}

inline std::optional<std::size_t> find_assignment(const std::string& text,
                                                  std::string_view field) {
  const std::string key = "mpc." + std::string(field);
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    std::size_t p = pos + key.size();
    // reject prefixes such as mpc.gen matching mpc.gencost
    if (p < text.size() && (std::isalnum(static_cast<unsigned char>(text[p])) ||
                            text[p] == '_')) {
      pos = p;
      continue;
    }
    while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p])))
      ++p;
    if (p < text.size() && text[p] == '=') return p + 1;
    pos = p;
  }
  return std::nullopt;
}

inline double parse_number(std::string_view token, std::string_view table,
                           std::size_t row) {
  std::string tok(token);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size()) {
    throw ParseError(std::string(table) + " row " + std::to_string(row) +
                     ": invalid number '" + tok + "'");
  }
  return v;
}

inline Table read_table(const std::string& text, std::string_view name,
                        bool required = true) {
  const auto eq = find_assignment(text, name);
  if (!eq) {
    if (required)
      throw ParseError(std::string(name) + " table: missing 'mpc." +
                       std::string(name) + " = [...]'");
    return {};
  }
  const std::size_t open = text.find('[', *eq);
  const std::size_t close = text.find(']', *eq);
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ParseError(std::string(name) + " table: unterminated matrix");
  for (std::size_t p = *eq; p < open; ++p)
    if (!std::isspace(static_cast<unsigned char>(text[p])))
      throw ParseError(std::string(name) + " table: expected '['");

  Table rows;
  std::vector<double> row;
  std::string token;
  auto flush_token = [&] {
    if (!token.empty()) {
      row.push_back(parse_number(token, name, rows.size() + 1));
      token.clear();
    }
  };
  auto flush_row = [&] {
    flush_token();
    if (!row.empty()) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t p = open + 1; p < close; ++p) {
    const char ch = text[p];
    if (ch == ';' || ch == '\n') {
      flush_row();
    } else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      flush_token();
    } else {
      token.push_back(ch);
    }
  }
  flush_row();
  return rows;
}

inline double read_scalar(const std::string& text, std::string_view name) {
  const auto eq = find_assignment(text, name);
  if (!eq) throw ParseError(std::string(name) + ": missing assignment");
  const std::size_t semi = text.find(';', *eq);
  std::string tok = text.substr(*eq, semi == std::string::npos
                                         ? std::string::npos
                                         : semi - *eq);
  tok.erase(std::remove_if(tok.begin(), tok.end(),
                           [](unsigned char c) { return std::isspace(c); }),
            tok.end());
  return parse_number(tok, name, 1);
}

inline std::string read_case_name(const std::string& text) {
  const std::size_t fn = text.find("function");
  if (fn == std::string::npos) return {};
  const std::size_t eq = text.find('=', fn);
  if (eq == std::string::npos) return {};
  std::size_t p = eq + 1;
  while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p])))
    ++p;
  std::size_t q = p;
  while (q < text.size() && (std::isalnum(static_cast<unsigned char>(text[q])) ||
                             text[q] == '_'))
    ++q;
  return text.substr(p, q - p);
}

inline void require_columns(const std::vector<double>& row, std::size_t n,
                            std::string_view table, std::size_t index) {
  if (row.size() < n)
    throw ParseError(std::string(table) + " row " + std::to_string(index + 1) +
                     ": expected at least " + std::to_string(n) +
                     " columns, found " + std::to_string(row.size()));
}

inline bool is_connected(std::size_t n_buses, const std::vector<Line>& lines) {
  if (n_buses == 0) return false;
  std::vector<std::size_t> parent(n_buses);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n_buses;
  for (const auto& l : lines) {
    const auto a = find(static_cast<std::size_t>(l.from_bus));
    const auto b = find(static_cast<std::size_t>(l.to_bus));
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

}  // namespace detail

/// Checks every structural invariant; throws ValidationError on the first
/// violation.
inline void validate_network(const PowerNetwork& net) {
  if (!(net.base_mva > 0.0)) throw ValidationError("base_mva must be positive");
  if (net.buses.empty()) throw ValidationError("network has no buses");
  const auto n_b = static_cast<int>(net.buses.size());
  int n_slack = 0;
  for (int i = 0; i < n_b; ++i) {
    if (net.buses[static_cast<std::size_t>(i)].id != i)
      throw ValidationError("bus ids are not contiguous");
    if (net.buses[static_cast<std::size_t>(i)].is_slack) ++n_slack;
  }
  if (n_slack != 1)
    throw ValidationError("expected exactly one slack bus, found " +
                          std::to_string(n_slack));
  for (std::size_t k = 0; k < net.lines.size(); ++k) {
    const auto& l = net.lines[k];
    const std::string where = "line " + std::to_string(k + 1) + ": ";
    if (l.from_bus < 0 || l.from_bus >= n_b || l.to_bus < 0 || l.to_bus >= n_b)
      throw ValidationError(where + "unknown bus");
    if (l.from_bus == l.to_bus) throw ValidationError(where + "self loop");
    if (!(l.susceptance > 0.0) || !std::isfinite(l.susceptance))
      throw ValidationError(where + "susceptance must be positive");
    if (!(l.flow_limit > 0.0) || !std::isfinite(l.flow_limit))
      throw ValidationError(where + "flow limit must be positive and finite");
  }
  if (net.generators.empty()) throw ValidationError("network has no generators");
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const auto& gen = net.generators[g];
    const std::string where = "generator " + std::to_string(g + 1) + ": ";
    if (gen.bus < 0 || gen.bus >= n_b) throw ValidationError(where + "unknown bus");
    if (!std::isfinite(gen.p_min) || !std::isfinite(gen.p_max) ||
        gen.p_min > gen.p_max)
      throw ValidationError(where + "requires finite p_min <= p_max");
    if (!(gen.cost_quad >= 0.0))
      throw ValidationError(where + "quadratic cost must be nonnegative");
  }
  if (!detail::is_connected(net.buses.size(), net.lines))
    throw ValidationError("network graph is not connected");
}

/// Parses MATPOWER-style case text into a validated per-unit network.
inline PowerNetwork parse_case(std::string_view text,
                               const ParseOptions& options = {}) {
  const std::string src = detail::strip_comments(text);
  PowerNetwork net;
  net.name = detail::read_case_name(src);
  net.base_mva = detail::read_scalar(src, "baseMVA");
  if (!(net.base_mva > 0.0)) throw ParseError("baseMVA must be positive");
  const double base = net.base_mva;

  const auto bus_rows = detail::read_table(src, "bus");
  const auto branch_rows = detail::read_table(src, "branch");
  const auto gen_rows = detail::read_table(src, "gen");
  const auto cost_rows = detail::read_table(src, "gencost");

  std::map<long, int> index_of;
  for (std::size_t i = 0; i < bus_rows.size(); ++i) {
    const auto& row = bus_rows[i];
    detail::require_columns(row, 3, "bus", i);
    Bus b;
    b.id = static_cast<int>(i);
    b.file_id = std::lround(row[0]);
    if (static_cast<double>(b.file_id) != row[0])
      throw ParseError("bus row " + std::to_string(i + 1) +
                       ": bus number must be an integer");
    if (!index_of.emplace(b.file_id, b.id).second)
      throw ParseError("bus row " + std::to_string(i + 1) +
                       ": duplicate bus number " + std::to_string(b.file_id));
    b.is_slack = std::lround(row[1]) == 3;
    b.load = row[2] / base;
    net.buses.push_back(b);
  }

  auto bus_index = [&](double raw, std::string_view table, std::size_t row) {
    const auto it = index_of.find(std::lround(raw));
    if (it == index_of.end())
      throw ParseError(std::string(table) + " row " + std::to_string(row + 1) +
                       ": unknown bus " + std::to_string(std::lround(raw)));
    return it->second;
  };

  for (std::size_t k = 0; k < branch_rows.size(); ++k) {
    const auto& row = branch_rows[k];
    detail::require_columns(row, 6, "branch", k);
    const bool in_service = row.size() < 11 || row[10] != 0.0;
    if (!in_service) continue;
    Line l;
    l.from_bus = bus_index(row[0], "branch", k);
    l.to_bus = bus_index(row[1], "branch", k);
    l.reactance = row[3];
    if (l.reactance == 0.0)
      throw ValidationError("branch row " + std::to_string(k + 1) +
                            ": zero reactance");
    l.susceptance = 1.0 / l.reactance;
    l.flow_limit = row[5] / base;
    net.lines.push_back(l);
  }

  if (cost_rows.size() < gen_rows.size())
    throw ParseError("gencost table: " + std::to_string(cost_rows.size()) +
                     " rows for " + std::to_string(gen_rows.size()) +
                     " generators");
  for (std::size_t g = 0; g < gen_rows.size(); ++g) {
    const auto& row = gen_rows[g];
    detail::require_columns(row, 10, "gen", g);
    const auto& cost = cost_rows[g];
    detail::require_columns(cost, 4, "gencost", g);
    if (std::lround(cost[0]) != 2)
      throw UnsupportedModelError("gencost row " + std::to_string(g + 1) +
                                  ": only polynomial cost model 2 is supported");
    const long n_coef = std::lround(cost[3]);
    if (n_coef < 0)
      throw ParseError("gencost row " + std::to_string(g + 1) +
                       ": negative coefficient count");
    if (n_coef > 3)
      throw UnsupportedModelError("gencost row " + std::to_string(g + 1) +
                                  ": polynomial degree " +
                                  std::to_string(n_coef - 1) + " exceeds 2");
    detail::require_columns(cost, 4 + static_cast<std::size_t>(n_coef),
                            "gencost", g);
    if (row[7] <= 0.0) continue;  // out of service

    // coefficients are listed highest order first
    double c2 = 0.0, c1 = 0.0, c0 = 0.0;
    const auto coef = [&](long k) { return cost[4 + static_cast<std::size_t>(k)]; };
    if (n_coef == 3) {
      c2 = coef(0);
      c1 = coef(1);
      c0 = coef(2);
    } else if (n_coef == 2) {
      c1 = coef(0);
      c0 = coef(1);
    } else if (n_coef == 1) {
      c0 = coef(0);
    }

    Generator gen;
    gen.bus = bus_index(row[0], "gen", g);
    gen.p_max = row[8] / base;
    gen.p_min = row[9] / base;
    gen.cost_lin = c1;
    gen.cost_quad = c2;
    net.cost_offset += c0;
    net.generators.push_back(gen);
  }

  if (options.slack_bus_id) {
    const auto it = index_of.find(*options.slack_bus_id);
    if (it == index_of.end())
      throw ValidationError("slack override: unknown bus " +
                            std::to_string(*options.slack_bus_id));
    for (auto& b : net.buses) b.is_slack = (b.id == it->second);
  }

  validate_network(net);
  return net;
}

/// Writes the network back in the case-file subset parse_case reads.
/// Constant cost terms are carried on the first generator.
inline std::string serialize_case(const PowerNetwork& net) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const double base = net.base_mva;
  std::ostringstream out;
  out << "function mpc = " << (net.name.empty() ? "case" : net.name) << "\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << num(base) << ";\n\n";
  out << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
  out << "mpc.bus = [\n";
  for (const auto& b : net.buses) {
    out << "\t" << b.file_id << "\t" << (b.is_slack ? 3 : 1) << "\t"
        << num(b.load * base) << "\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;\n";
  }
  out << "];\n\n";
  out << "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
  out << "mpc.gen = [\n";
  for (const auto& g : net.generators) {
    out << "\t" << net.buses[static_cast<std::size_t>(g.bus)].file_id
        << "\t0\t0\t0\t0\t1\t" << num(base) << "\t1\t" << num(g.p_max * base)
        << "\t" << num(g.p_min * base) << ";\n";
  }
  out << "];\n\n";
  out << "%% fbus tbus r x b rateA rateB rateC ratio angle status\n";
  out << "mpc.branch = [\n";
  for (const auto& l : net.lines) {
    out << "\t" << net.buses[static_cast<std::size_t>(l.from_bus)].file_id
        << "\t" << net.buses[static_cast<std::size_t>(l.to_bus)].file_id
        << "\t0\t" << num(l.reactance) << "\t0\t" << num(l.flow_limit * base)
        << "\t0\t0\t0\t0\t1;\n";
  }
  out << "];\n\n";
  out << "%% 2 startup shutdown n c2 c1 c0\n";
  out << "mpc.gencost = [\n";
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const auto& gen = net.generators[g];
    out << "\t2\t0\t0\t3\t" << num(gen.cost_quad) << "\t" << num(gen.cost_lin)
        << "\t" << num(g == 0 ? net.cost_offset : 0.0) << ";\n";
  }
  out << "];\n";
  return out.str();
}

inline NetworkStats network_stats(const PowerNetwork& net) {
  NetworkStats s;
  s.num_buses = net.buses.size();
  s.num_lines = net.lines.size();
  s.num_generators = net.generators.size();
  for (const auto& b : net.buses) s.total_load_mw += b.load * net.base_mva;
  for (const auto& g : net.generators)
    s.total_capacity_mw += g.p_max * net.base_mva;
  s.capacity_sufficient = s.total_capacity_mw >= s.total_load_mw;
  if (!s.capacity_sufficient)
    s.warnings.push_back("total generation capacity is below total load; "
                         "the dispatch problem is infeasible");
  return s;
}

}  // namespace dcdual
