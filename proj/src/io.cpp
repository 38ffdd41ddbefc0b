#include "fdm/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

#include "fdm/error.hpp"

namespace fdm::io {
namespace {

[[noreturn]] void schema_error(const std::string& source, const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ": " + path + ": " + what);
}

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& source,
                const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      schema_error(source, path, "unknown field \"" + key + "\"");
  }
}

const Json& require(const Json& obj, const char* key, const std::string& source, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(source, path, std::string("missing field \"") + key + "\"");
  return *it;
}

const Json& require_object(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_object()) schema_error(source, path, "expected an object");
  return v;
}

const Json& require_array(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_array()) schema_error(source, path, "expected an array");
  return v;
}

double number(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_number()) schema_error(source, path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) schema_error(source, path, "expected a finite number");
  return x;
}

std::int64_t integer(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_number_integer()) schema_error(source, path, "expected an integer");
  return v.get<std::int64_t>();
}

std::array<double, 3> vec3(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_array() || v.size() != 3) schema_error(source, path, "expected an array of 3 numbers");
  return {number(v[0], source, path + "[0]"), number(v[1], source, path + "[1]"), number(v[2], source, path + "[2]")};
}

Json row_json(const DenseMatrix& m, std::size_t r) { return Json::array({m(r, 0), m(r, 1), m(r, 2)}); }

void write_number(std::string& out, double x) {
  if (!std::isfinite(x)) {
    out += "null";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

void write_json(std::string& out, const Json& v, int depth) {
  const auto indent = [&out](int d) { out.append(static_cast<std::size_t>(2 * d), ' '); };
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : v.items()) {
        if (!first) out += ",\n";
        first = false;
        indent(depth + 1);
        out += Json(key).dump();
        out += ": ";
        write_json(out, value, depth + 1);
      }
      out += "\n";
      indent(depth);
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_primitive(); });
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : v) {
        if (!first) out += flat ? ", " : ",\n";
        first = false;
        if (!flat) indent(depth + 1);
        write_json(out, e, depth + 1);
      }
      if (!flat) {
        out += "\n";
        indent(depth);
      }
      out += "]";
      return;
    }
    case Json::value_t::number_float:
      write_number(out, v.get<double>());
      return;
    default:
      out += v.dump();
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Goal parse_goal(const Json& g, const NetworkDocument& net, const std::string& source, const std::string& path) {
  require_object(g, source, path);
  check_keys(g, {"type", "elements", "targets", "weight"}, source, path);
  const Json& type_json = require(g, "type", source, path);
  if (!type_json.is_string()) schema_error(source, path + ".type", "expected a string");
  const auto type_name = type_json.get<std::string>();

  Goal goal;
  if (type_name == "node_point")
    goal.type = GoalType::NodePoint;
  else if (type_name == "edge_length")
    goal.type = GoalType::EdgeLength;
  else if (type_name == "edge_force")
    goal.type = GoalType::EdgeForce;
  else
    schema_error(source, path + ".type", "unknown goal type \"" + type_name + "\"");
  const bool on_vertices = goal.type == GoalType::NodePoint;

  if (const auto it = g.find("elements"); it != g.end()) {
    require_array(*it, source, path + ".elements");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const std::string epath = path + ".elements[" + std::to_string(k) + "]";
      const auto id = integer((*it)[k], source, epath);
      const auto index = on_vertices ? net.ids.vertex_index(id) : net.ids.edge_index(id);
      if (!index) schema_error(source, epath, std::string("unknown ") + (on_vertices ? "vertex" : "edge") + " id " +
                                                  std::to_string(id));
      goal.elements.push_back(*index);
    }
  } else if (on_vertices) {
    const auto free = net.network.free_vertices();
    goal.elements.assign(free.begin(), free.end());
  } else {
    for (std::size_t i = 0; i < net.network.edge_count(); ++i) goal.elements.push_back(static_cast<Index>(i));
  }

  const Json& targets = require(g, "targets", source, path);
  const std::string tpath = path + ".targets";
  if (on_vertices) {
    require_array(targets, source, tpath);
    if (targets.size() != goal.elements.size())
      schema_error(source, tpath, "expected " + std::to_string(goal.elements.size()) + " targets, got " +
                                      std::to_string(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const auto p = vec3(targets[k], source, tpath + "[" + std::to_string(k) + "]");
      goal.targets.insert(goal.targets.end(), p.begin(), p.end());
    }
  } else if (targets.is_number()) {
    goal.targets.assign(goal.elements.size(), number(targets, source, tpath));
  } else {
    require_array(targets, source, tpath);
    if (targets.size() != goal.elements.size())
      schema_error(source, tpath, "expected " + std::to_string(goal.elements.size()) + " targets, got " +
                                      std::to_string(targets.size()));
    for (std::size_t k = 0; k < targets.size(); ++k)
      goal.targets.push_back(number(targets[k], source, tpath + "[" + std::to_string(k) + "]"));
  }

  if (const auto it = g.find("weight"); it != g.end()) {
    goal.weight = number(*it, source, path + ".weight");
    if (!(goal.weight > 0.0)) schema_error(source, path + ".weight", "weight must be positive");
  }
  return goal;
}

OptimizerConfig parse_optimizer(const Json& o, const std::string& source, const std::string& path) {
  require_object(o, source, path);
  check_keys(o, {"method", "learning_rate", "beta1", "beta2", "epsilon", "max_iterations", "grad_tol"}, source, path);
  OptimizerConfig config;
  if (const auto it = o.find("method"); it != o.end()) {
    const std::string name = it->is_string() ? it->get<std::string>() : "";
    if (name == "adam")
      config.method = Method::Adam;
    else if (name == "sgd")
      config.method = Method::Sgd;
    else
      schema_error(source, path + ".method", "expected \"sgd\" or \"adam\"");
  }
  const auto real = [&](const char* key, double& target) {
    if (const auto it = o.find(key); it != o.end()) target = number(*it, source, path + "." + key);
  };
  real("learning_rate", config.learning_rate);
  real("beta1", config.beta1);
  real("beta2", config.beta2);
  real("epsilon", config.epsilon);
  real("grad_tol", config.grad_tol);
  if (const auto it = o.find("max_iterations"); it != o.end()) {
    const auto n = integer(*it, source, path + ".max_iterations");
    if (n < 0 || n > std::numeric_limits<int>::max())
      schema_error(source, path + ".max_iterations", "out of range");
    config.max_iterations = static_cast<int>(n);
  }
  return config;
}

}  // namespace

// ---------------------------------------------------------------------------

NetworkIds::NetworkIds(std::vector<std::int64_t> vertex_ids, std::vector<std::int64_t> edge_ids)
    : vertex_ids_(std::move(vertex_ids)), edge_ids_(std::move(edge_ids)) {
  for (std::size_t i = 0; i < vertex_ids_.size(); ++i) vertex_lookup_.emplace(vertex_ids_[i], static_cast<Index>(i));
  for (std::size_t i = 0; i < edge_ids_.size(); ++i) edge_lookup_.emplace(edge_ids_[i], static_cast<Index>(i));
}

std::optional<Index> NetworkIds::vertex_index(std::int64_t id) const {
  const auto it = vertex_lookup_.find(id);
  if (it == vertex_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<Index> NetworkIds::edge_index(std::int64_t id) const {
  const auto it = edge_lookup_.find(id);
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

NetworkIds NetworkIds::sequential(std::size_t vertex_count, std::size_t edge_count) {
  std::vector<std::int64_t> v(vertex_count), e(edge_count);
  for (std::size_t i = 0; i < vertex_count; ++i) v[i] = static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < edge_count; ++i) e[i] = static_cast<std::int64_t>(i);
  return {std::move(v), std::move(e)};
}

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                                           ": malformed JSON");
  }
}

NetworkDocument parse_network(const Json& doc, const std::string& source) {
  require_object(doc, source, "$");
  check_keys(doc, {"version", "vertices", "edges"}, source, "$");
  if (const auto it = doc.find("version"); it != doc.end() && !it->is_string())
    schema_error(source, "version", "expected a string");

  struct VertexRecord {
    std::int64_t id;
    std::array<double, 3> xyz;
    std::array<double, 3> load;
    bool support;
  };
  struct EdgeRecord {
    std::int64_t id, start, end;
    double q;
  };

  const Json& vertices_json = require_array(require(doc, "vertices", source, "$"), source, "vertices");
  std::vector<VertexRecord> vertices;
  for (std::size_t k = 0; k < vertices_json.size(); ++k) {
    const std::string path = "vertices[" + std::to_string(k) + "]";
    const Json& v = require_object(vertices_json[k], source, path);
    check_keys(v, {"id", "xyz", "support", "load"}, source, path);
    VertexRecord rec{integer(require(v, "id", source, path), source, path + ".id"),
                     vec3(require(v, "xyz", source, path), source, path + ".xyz"),
                     {0.0, 0.0, 0.0},
                     false};
    if (const auto it = v.find("load"); it != v.end()) rec.load = vec3(*it, source, path + ".load");
    if (const auto it = v.find("support"); it != v.end()) {
      if (!it->is_boolean()) schema_error(source, path + ".support", "expected a boolean");
      rec.support = it->get<bool>();
    }
    vertices.push_back(rec);
  }
  std::sort(vertices.begin(), vertices.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t k = 1; k < vertices.size(); ++k)
    if (vertices[k].id == vertices[k - 1].id)
      schema_error(source, "vertices", "duplicate vertex id " + std::to_string(vertices[k].id));

  std::vector<EdgeRecord> edges;
  if (const auto it = doc.find("edges"); it != doc.end()) {
    require_array(*it, source, "edges");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const std::string path = "edges[" + std::to_string(k) + "]";
      const Json& e = require_object((*it)[k], source, path);
      check_keys(e, {"id", "start", "end", "q"}, source, path);
      EdgeRecord rec{integer(require(e, "id", source, path), source, path + ".id"),
                     integer(require(e, "start", source, path), source, path + ".start"),
                     integer(require(e, "end", source, path), source, path + ".end"), -1.0};
      if (const auto q = e.find("q"); q != e.end()) rec.q = number(*q, source, path + ".q");
      edges.push_back(rec);
    }
  }
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t k = 1; k < edges.size(); ++k)
    if (edges[k].id == edges[k - 1].id)
      schema_error(source, "edges", "duplicate edge id " + std::to_string(edges[k].id));

  std::vector<std::int64_t> vertex_ids, edge_ids;
  for (const auto& v : vertices) vertex_ids.push_back(v.id);
  for (const auto& e : edges) edge_ids.push_back(e.id);
  NetworkIds ids(std::move(vertex_ids), std::move(edge_ids));

  const std::size_t n = vertices.size();
  DenseMatrix xyz(n, 3), loads(n, 3);
  std::vector<Index> supports;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      xyz(i, c) = vertices[i].xyz[c];
      loads(i, c) = vertices[i].load[c];
    }
    if (vertices[i].support) supports.push_back(static_cast<Index>(i));
  }
  std::vector<Edge> graph_edges;
  std::vector<double> q;
  for (const auto& e : edges) {
    const auto a = ids.vertex_index(e.start);
    const auto b = ids.vertex_index(e.end);
    if (!a || !b)
      schema_error(source, "edges", "edge " + std::to_string(e.id) + " references unknown vertex id " +
                                        std::to_string(a ? e.end : e.start));
    graph_edges.push_back({*a, *b});
    q.push_back(e.q);
  }

  try {
    FdmNetwork network = build_network(std::move(xyz), std::move(graph_edges), std::move(supports), std::move(loads));
    Theta theta = make_theta(network, std::move(q));
    return {std::move(network), std::move(theta), std::move(ids)};
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, source + ": " + e.what());
  }
}

NetworkDocument load_network(const std::filesystem::path& path) {
  return parse_network(parse_json_text(read_file(path), path.string()), path.string());
}

Json network_to_json(const FdmNetwork& network, const Theta& theta, const NetworkIds& ids, const DenseMatrix* xyz) {
  std::vector<Index> support_row(network.vertex_count(), -1);
  for (std::size_t k = 0; k < network.support_count(); ++k)
    support_row[static_cast<std::size_t>(network.supports()[k])] = static_cast<Index>(k);

  Json vertices = Json::array();
  for (std::size_t v = 0; v < network.vertex_count(); ++v) {
    const bool support = support_row[v] >= 0;
    const DenseMatrix& source = support ? theta.support_xyz : (xyz ? *xyz : network.coordinates());
    const std::size_t r = support ? static_cast<std::size_t>(support_row[v]) : v;
    Json vertex;
    vertex["id"] = ids.vertex_ids()[v];
    vertex["xyz"] = row_json(source, r);
    vertex["support"] = support;
    vertex["load"] = row_json(theta.loads, v);
    vertices.push_back(std::move(vertex));
  }
  Json edges = Json::array();
  for (std::size_t i = 0; i < network.edge_count(); ++i) {
    const auto& e = network.edges()[i];
    Json edge;
    edge["id"] = ids.edge_ids()[i];
    edge["start"] = ids.vertex_ids()[static_cast<std::size_t>(e.start)];
    edge["end"] = ids.vertex_ids()[static_cast<std::size_t>(e.end)];
    edge["q"] = theta.q[i];
    edges.push_back(std::move(edge));
  }
  Json doc;
  doc["version"] = kFormatVersion;
  doc["vertices"] = std::move(vertices);
  doc["edges"] = std::move(edges);
  return doc;
}

void save_network(const std::filesystem::path& path, const NetworkDocument& doc) {
  write_file(path, format_json(network_to_json(doc.network, doc.theta, doc.ids)) + "\n");
}

Job parse_job(const Json& doc, const std::filesystem::path& base_dir, const std::string& source) {
  require_object(doc, source, "$");
  check_keys(doc, {"version", "network", "goals", "optimizer", "trainable"}, source, "$");
  const Json& net = require(doc, "network", source, "$");

  Job job{};
  if (net.is_string()) {
    std::filesystem::path p = net.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    job.network = load_network(p);
  } else if (net.is_object()) {
    job.network = parse_network(net, source + ": network");
  } else {
    schema_error(source, "network", "expected a path or an inline network object");
  }

  if (const auto it = doc.find("goals"); it != doc.end()) {
    require_array(*it, source, "goals");
    for (std::size_t k = 0; k < it->size(); ++k)
      job.loss.goals.push_back(parse_goal((*it)[k], job.network, source, "goals[" + std::to_string(k) + "]"));
  }
  if (const auto it = doc.find("optimizer"); it != doc.end()) job.config = parse_optimizer(*it, source, "optimizer");
  if (const auto it = doc.find("trainable"); it != doc.end()) {
    require_array(*it, source, "trainable");
    job.config.trainable = Trainable{false, false, false};
    for (std::size_t k = 0; k < it->size(); ++k) {
      const Json& t = (*it)[k];
      const std::string name = t.is_string() ? t.get<std::string>() : "";
      if (name == "q")
        job.config.trainable.q = true;
      else if (name == "loads")
        job.config.trainable.loads = true;
      else if (name == "support_xyz")
        job.config.trainable.support_xyz = true;
      else
        schema_error(source, "trainable[" + std::to_string(k) + "]", "expected \"q\", \"loads\" or \"support_xyz\"");
    }
  }
  return job;
}

Job load_job(const std::filesystem::path& path) {
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return parse_job(parse_json_text(read_file(path), path.string()), base, path.string());
}

void apply_overrides(OptimizerConfig& config, const ConfigOverrides& overrides) {
  if (overrides.max_iterations) config.max_iterations = *overrides.max_iterations;
  if (overrides.learning_rate) config.learning_rate = *overrides.learning_rate;
  if (overrides.method) config.method = *overrides.method;
}

Json results_to_json(const NetworkDocument& doc, const Theta& theta, const EquilibriumState& state,
                     const OptimizationTrace* trace) {
  const FdmNetwork& network = doc.network;
  const auto& vids = doc.ids.vertex_ids();

  Json vertices = Json::array();
  for (std::size_t v = 0; v < network.vertex_count(); ++v) {
    Json vertex;
    vertex["id"] = vids[v];
    vertex["xyz"] = row_json(state.xyz, v);
    vertex["support"] = network.is_support(static_cast<Index>(v));
    vertices.push_back(std::move(vertex));
  }
  Json reactions = Json::array();
  for (std::size_t k = 0; k < network.support_count(); ++k) {
    Json r;
    r["id"] = vids[static_cast<std::size_t>(network.supports()[k])];
    r["force"] = row_json(state.reactions, k);
    reactions.push_back(std::move(r));
  }
  Json edges = Json::array();
  for (std::size_t i = 0; i < network.edge_count(); ++i) {
    Json e;
    e["id"] = doc.ids.edge_ids()[i];
    e["q"] = theta.q[i];
    e["force"] = state.forces[i];
    e["length"] = state.lengths[i];
    edges.push_back(std::move(e));
  }

  Json out;
  out["version"] = kFormatVersion;
  out["vertices"] = std::move(vertices);
  out["reactions"] = std::move(reactions);
  out["edges"] = std::move(edges);
  if (trace) {
    Json opt;
    opt["iterations"] = trace->iterations();
    opt["termination"] = std::string(to_string(trace->termination));
    if (!trace->diagnostic.empty()) opt["diagnostic"] = trace->diagnostic;
    opt["initial_loss"] = trace->loss_history.empty() ? 0.0 : trace->loss_history.front();
    opt["best_loss"] = trace->best_loss;
    opt["best_iteration"] = trace->best_iteration;
    opt["symbolic_analyses"] = trace->symbolic_analyses;
    Json flips = Json::array();
    for (Index i : trace->sign_flips) flips.push_back(doc.ids.edge_ids()[static_cast<std::size_t>(i)]);
    opt["sign_flips"] = std::move(flips);
    opt["loss_history"] = trace->loss_history;
    opt["grad_norm_history"] = trace->grad_norm_history;
    out["optimization"] = std::move(opt);
  }
  out["network"] = network_to_json(network, theta, doc.ids, &state.xyz);
  return out;
}

void save_results(const std::filesystem::path& path, const NetworkDocument& doc, const Theta& theta,
                  const EquilibriumState& state, const OptimizationTrace* trace) {
  write_file(path, format_json(results_to_json(doc, theta, state, trace)) + "\n");
}

std::string format_json(const Json& doc) {
  std::string out;
  write_json(out, doc, 0);
  return out;
}

std::string obj_string(const FdmNetwork& network, const EquilibriumState& state) {
  std::string out;
  char buf[128];
  for (std::size_t v = 0; v < network.vertex_count(); ++v) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", state.xyz(v, 0), state.xyz(v, 1), state.xyz(v, 2));
    out += buf;
  }
  for (const auto& e : network.edges()) {
    std::snprintf(buf, sizeof buf, "l %d %d\n", e.start + 1, e.end + 1);
    out += buf;
  }
  return out;
}

void export_obj(const std::filesystem::path& path, const FdmNetwork& network, const EquilibriumState& state) {
  write_file(path, obj_string(network, state));
}

}  // namespace fdm::io
