#include "cbn/netio.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cbn {

namespace {

struct Line {
  int number;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(std::istream& in, const std::string& name) {
  std::vector<Line> lines;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    Line line{number, {}};
    std::string tok;
    while (ls >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  if (in.bad())
    throw Error(ErrorCode::parse, name + ": read failure");
  return lines;
}

[[noreturn]] void fail(const std::string& name, int line,
                       const std::string& what) {
  throw Error(ErrorCode::parse,
              name + ":" + std::to_string(line) + ": " + what);
}

double parse_real(const std::string& name, int line, const std::string& tok) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(name, line, "expected a number, got '" + tok + "'");
  }
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

BeliefNetwork read_network(std::istream& in, const std::string& display_name) {
  std::vector<Line> lines = tokenize(in, display_name);
  BeliefNetwork net;
  bool saw_network = false;
  std::vector<char> saw_parents, saw_cpt;
  // First pass declares variables so later lines can refer to any of them.
  for (const Line& line : lines) {
    const auto& t = line.tokens;
    if (t[0] == "network") {
      if (saw_network) fail(display_name, line.number, "repeated network line");
      if (t.size() != 2) fail(display_name, line.number, "network <name>");
      net.name = t[1];
      saw_network = true;
    } else if (t[0] == "variable") {
      if (t.size() < 3)
        fail(display_name, line.number, "variable <name> <k> <states...>");
      if (net.find_variable(t[1]))
        fail(display_name, line.number, "variable " + t[1] + " redeclared");
      int k = 0;
      try {
        k = std::stoi(t[2]);
      } catch (const std::exception&) {
        fail(display_name, line.number, "bad state count '" + t[2] + "'");
      }
      if (k < 1 || t.size() != static_cast<std::size_t>(3 + k))
        fail(display_name, line.number,
             "variable " + t[1] + " declares " + t[2] + " states but lists " +
                 std::to_string(t.size() - 3));
      net.add_variable(t[1], std::vector<std::string>(t.begin() + 3, t.end()));
      saw_parents.push_back(0);
      saw_cpt.push_back(0);
    } else if (t[0] != "parents" && t[0] != "cpt") {
      fail(display_name, line.number, "unknown directive '" + t[0] + "'");
    }
  }
  if (!saw_network) {
    if (lines.empty())
      throw Error(ErrorCode::parse, display_name + ": empty network file");
    fail(display_name, lines.front().number, "missing network line");
  }
  for (const Line& line : lines) {
    const auto& t = line.tokens;
    if (t[0] == "parents") {
      if (t.size() < 2) fail(display_name, line.number, "parents <child> ...");
      VariableId child = net.require_variable(t[1]);
      if (saw_parents[child])
        fail(display_name, line.number, "parents of " + t[1] + " redeclared");
      saw_parents[child] = 1;
      std::vector<VariableId> parents;
      for (std::size_t i = 2; i < t.size(); ++i) {
        VariableId p = net.require_variable(t[i]);
        if (p == child)
          fail(display_name, line.number, t[1] + " cannot be its own parent");
        parents.push_back(p);
      }
      net.set_parents(child, std::move(parents));
    }
  }
  for (const Line& line : lines) {
    const auto& t = line.tokens;
    if (t[0] == "cpt") {
      if (t.size() < 3) fail(display_name, line.number, "cpt <child> <values...>");
      VariableId child = net.require_variable(t[1]);
      if (saw_cpt[child])
        fail(display_name, line.number, "cpt of " + t[1] + " redeclared");
      saw_cpt[child] = 1;
      std::size_t expect = net.card(child);
      for (VariableId p : net.cpts[child].parents)
        expect *= static_cast<std::size_t>(net.card(p));
      if (t.size() - 2 != expect)
        fail(display_name, line.number,
             "cpt of " + t[1] + " needs " + std::to_string(expect) +
                 " values, got " + std::to_string(t.size() - 2));
      std::vector<double> values;
      for (std::size_t i = 2; i < t.size(); ++i)
        values.push_back(parse_real(display_name, line.number, t[i]));
      net.set_cpt(child, values);
    }
  }
  for (int v = 0; v < net.size(); ++v)
    if (!saw_cpt[v])
      throw Error(ErrorCode::parse, display_name + ": no cpt for variable " +
                                        net.variables[v].name);
  return net;
}

BeliefNetwork read_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse, "cannot open " + path);
  return read_network(in, path);
}

BeliefNetwork read_network_string(const std::string& text) {
  std::istringstream in(text);
  return read_network(in, "<string>");
}

void apply_evidence(BeliefNetwork& net, std::istream& in,
                    const std::string& display_name) {
  for (const Line& line : tokenize(in, display_name)) {
    const auto& t = line.tokens;
    if (t[0] == "observe") {
      if (t.size() != 3)
        fail(display_name, line.number, "observe <variable> <state>");
      VariableId v = net.require_variable(t[1]);
      net = observe(std::move(net), v, t[2]);
    } else if (t[0] == "likelihood") {
      if (t.size() < 3)
        fail(display_name, line.number, "likelihood <variable> <values...>");
      VariableId v = net.require_variable(t[1]);
      if (t.size() - 2 != static_cast<std::size_t>(net.card(v)))
        fail(display_name, line.number,
             "likelihood over " + t[1] + " needs " +
                 std::to_string(net.card(v)) + " values");
      std::vector<double> values;
      for (std::size_t i = 2; i < t.size(); ++i)
        values.push_back(parse_real(display_name, line.number, t[i]));
      LikelihoodFinding f;
      f.scope_vars = {v};
      f.table = Table(net.scope_of({v}), values);
      net = add_finding(std::move(net), std::move(f));
    } else if (t[0] == "likelihood-joint") {
      auto colon = std::find(t.begin(), t.end(), ":");
      if (colon == t.end() || colon == t.begin() + 1)
        fail(display_name, line.number,
             "likelihood-joint <vars...> : <values...>");
      std::vector<VariableId> order;
      std::vector<int> cards;
      for (auto it = t.begin() + 1; it != colon; ++it) {
        VariableId v = net.require_variable(*it);
        order.push_back(v);
        cards.push_back(net.card(v));
      }
      std::size_t expect = 1;
      for (int c : cards) expect *= static_cast<std::size_t>(c);
      if (static_cast<std::size_t>(t.end() - colon - 1) != expect)
        fail(display_name, line.number,
             "likelihood-joint needs " + std::to_string(expect) + " values");
      std::vector<double> values;
      for (auto it = colon + 1; it != t.end(); ++it)
        values.push_back(parse_real(display_name, line.number, *it));
      LikelihoodFinding f;
      f.scope_vars = order;
      std::sort(f.scope_vars.begin(), f.scope_vars.end());
      if (std::adjacent_find(f.scope_vars.begin(), f.scope_vars.end()) !=
          f.scope_vars.end())
        fail(display_name, line.number, "repeated variable in likelihood-joint");
      f.table = Table::from_ordered(order, cards, values);
      net = add_finding(std::move(net), std::move(f));
    } else {
      fail(display_name, line.number, "unknown directive '" + t[0] + "'");
    }
  }
}

BeliefNetwork read_evidence_file(BeliefNetwork net, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse, "cannot open " + path);
  apply_evidence(net, in, path);
  return net;
}

BeliefNetwork read_evidence_string(BeliefNetwork net, const std::string& text) {
  std::istringstream in(text);
  apply_evidence(net, in, "<string>");
  return net;
}

std::string write_network(const BeliefNetwork& net) {
  std::ostringstream os;
  os << "network " << (net.name.empty() ? "unnamed" : net.name) << "\n";
  for (const Variable& v : net.variables) {
    os << "variable " << v.name << " " << v.cardinality();
    for (const std::string& s : v.states) os << " " << s;
    os << "\n";
  }
  for (const Cpt& cpt : net.cpts) {
    os << "parents " << net.variables[cpt.child].name;
    for (VariableId p : cpt.parents) os << " " << net.variables[p].name;
    os << "\n";
  }
  for (const Cpt& cpt : net.cpts) {
    os << "cpt " << net.variables[cpt.child].name;
    // Emit in declared order: parents slowest to fastest, child last.
    std::vector<VariableId> order = cpt.parents;
    order.push_back(cpt.child);
    std::vector<int> state(order.size(), 0);
    for (;;) {
      Assignment a;
      for (std::size_t i = 0; i < order.size(); ++i)
        a.emplace_back(order[i], state[i]);
      os << " " << format_real(cpt.table[cpt.table.index_of(a)]);
      int d = static_cast<int>(order.size()) - 1;
      while (d >= 0 && ++state[d] == net.card(order[d])) state[d--] = 0;
      if (d < 0) break;
    }
    os << "\n";
  }
  return os.str();
}

std::string write_evidence(const BeliefNetwork& net) {
  std::ostringstream os;
  for (const LikelihoodFinding& f : net.evidence) {
    if (f.scope_vars.size() == 1) {
      os << "likelihood " << net.variables[f.scope_vars[0]].name;
      for (double v : f.table.values()) os << " " << format_real(v);
      os << "\n";
    } else {
      os << "likelihood-joint";
      for (VariableId v : f.scope_vars) os << " " << net.variables[v].name;
      os << " :";
      for (double v : f.table.values()) os << " " << format_real(v);
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace cbn
