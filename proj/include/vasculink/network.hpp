#pragma once

// Vessel-network topology: pipes, nodes with inlet/outlet/connecting roles,
// Tx/Rx placement, and the JSON network-file format.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "vasculink/error.hpp"

namespace vasculink {

/// A cylindrical conduit, directed along the flow.
struct Pipe {
  std::string id;
  std::string source;
  std::string target;
  double length = 0.0;  // m
  double radius = 0.0;  // m

  friend bool operator==(const Pipe&, const Pipe&) = default;
};

enum class NodeKind { inlet, outlet, connecting };

struct NodeRole {
  NodeKind kind = NodeKind::connecting;
  double flow_rate = 0.0;  // m^3/s, inlets only

  static NodeRole inlet(double q) { return {NodeKind::inlet, q}; }
  static NodeRole outlet() { return {NodeKind::outlet, 0.0}; }
  static NodeRole connecting() { return {NodeKind::connecting, 0.0}; }

  friend bool operator==(const NodeRole&, const NodeRole&) = default;
};

struct Node {
  std::string id;
  NodeRole role;

  friend bool operator==(const Node&, const Node&) = default;
};

inline std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::inlet: return "inlet";
    case NodeKind::outlet: return "outlet";
    case NodeKind::connecting: return "connecting";
  }
  return "connecting";
}

namespace detail {

template <class... Parts>
std::string concat(const Parts&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

// Kahn's algorithm with smallest-index-first tie-breaking. On a cycle, returns
// the index of one pipe lying on it through `cycle_pipe` and an empty order.
inline std::vector<std::size_t> topological_sort(std::size_t node_count,
                                                 const std::vector<std::size_t>& sources,
                                                 const std::vector<std::size_t>& targets,
                                                 std::size_t* cycle_pipe) {
  std::vector<std::vector<std::size_t>> out(node_count), in(node_count);
  std::vector<std::size_t> indegree(node_count, 0);
  for (std::size_t p = 0; p < sources.size(); ++p) {
    out[sources[p]].push_back(p);
    in[targets[p]].push_back(p);
    ++indegree[targets[p]];
  }

  std::vector<std::size_t> ready;
  for (std::size_t n = node_count; n-- > 0;)
    if (indegree[n] == 0) ready.push_back(n);

  std::vector<std::size_t> order;
  order.reserve(node_count);
  std::vector<bool> done(node_count, false);
  while (!ready.empty()) {
    // `ready` is kept sorted descending so back() is the smallest index.
    const std::size_t n = ready.back();
    ready.pop_back();
    order.push_back(n);
    done[n] = true;
    for (std::size_t p : out[n]) {
      if (--indegree[targets[p]] == 0) {
        const auto pos = std::lower_bound(ready.begin(), ready.end(), targets[p], std::greater<>{});
        ready.insert(pos, targets[p]);
      }
    }
  }
  if (order.size() == node_count) return order;

  // Every unfinished node has an unfinished predecessor; walk backwards
  // until a node repeats. The last edge taken closes the cycle.
  std::size_t v = 0;
  while (done[v]) ++v;
  std::vector<bool> seen(node_count, false);
  std::size_t last_edge = 0;
  while (!seen[v]) {
    seen[v] = true;
    for (std::size_t p : in[v]) {
      if (!done[sources[p]]) {
        last_edge = p;
        v = sources[p];
        break;
      }
    }
  }
  if (cycle_pipe) *cycle_pipe = last_edge;
  return {};
}

}  // namespace detail

/// Directed multigraph of pipes. Immutable; every invariant is checked on
/// construction.
class VesselNetwork {
 public:
  VesselNetwork(std::vector<Node> nodes, std::vector<Pipe> pipes, double diffusion,
                double viscosity = 1.0)
      : nodes_(std::move(nodes)),
        pipes_(std::move(pipes)),
        diffusion_(diffusion),
        viscosity_(viscosity) {
    build();
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Pipe>& pipes() const noexcept { return pipes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const Pipe& pipe(std::size_t i) const { return pipes_.at(i); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t pipe_count() const noexcept { return pipes_.size(); }

  /// Molecular diffusion coefficient D in m^2/s.
  double diffusion() const noexcept { return diffusion_; }
  /// Dynamic viscosity in Pa s (does not affect any flow split).
  double viscosity() const noexcept { return viscosity_; }

  std::size_t source(std::size_t pipe) const { return source_.at(pipe); }
  std::size_t target(std::size_t pipe) const { return target_.at(pipe); }
  std::span<const std::size_t> out_pipes(std::size_t node) const { return out_.at(node); }
  std::span<const std::size_t> in_pipes(std::size_t node) const { return in_.at(node); }

  bool has_pipe(std::string_view id) const { return pipe_lookup_.count(std::string(id)) != 0; }

  std::size_t pipe_index(std::string_view id) const {
    const auto it = pipe_lookup_.find(std::string(id));
    if (it == pipe_lookup_.end()) throw ParseError(detail::concat("unknown pipe '", id, "'"));
    return it->second;
  }

  std::size_t node_index(std::string_view id) const {
    const auto it = node_lookup_.find(std::string(id));
    if (it == node_lookup_.end()) throw ParseError(detail::concat("unknown node '", id, "'"));
    return it->second;
  }

  /// Connecting node whose outflow splits (out-degree > 1).
  bool is_bifurcation(std::size_t node) const {
    return nodes_.at(node).role.kind == NodeKind::connecting && out_[node].size() > 1;
  }

  /// Connecting node merging several inflows into one outflow.
  bool is_junction(std::size_t node) const {
    return nodes_.at(node).role.kind == NodeKind::connecting && in_[node].size() > 1 &&
           out_[node].size() == 1;
  }

  /// Node indices in a topological order (sources first).
  const std::vector<std::size_t>& topological_order() const noexcept { return order_; }

  double total_inflow() const {
    double q = 0.0;
    for (const auto& n : nodes_)
      if (n.role.kind == NodeKind::inlet) q += n.role.flow_rate;
    return q;
  }

  friend bool operator==(const VesselNetwork& a, const VesselNetwork& b) {
    return a.nodes_ == b.nodes_ && a.pipes_ == b.pipes_ && a.diffusion_ == b.diffusion_ &&
           a.viscosity_ == b.viscosity_;
  }

 private:
  void build() {
    using detail::concat;
    if (!(diffusion_ > 0.0) || !std::isfinite(diffusion_))
      throw ModelError(concat("diffusion must be positive, got ", diffusion_));
    if (!(viscosity_ > 0.0) || !std::isfinite(viscosity_))
      throw ModelError(concat("viscosity must be positive, got ", viscosity_));

    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (!node_lookup_.emplace(nodes_[i].id, i).second)
        throw ParseError(concat("duplicate node id '", nodes_[i].id, "'"));
    for (std::size_t i = 0; i < pipes_.size(); ++i)
      if (!pipe_lookup_.emplace(pipes_[i].id, i).second)
        throw ParseError(concat("duplicate pipe id '", pipes_[i].id, "'"));

    out_.assign(nodes_.size(), {});
    in_.assign(nodes_.size(), {});
    for (std::size_t i = 0; i < pipes_.size(); ++i) {
      const Pipe& p = pipes_[i];
      const auto s = node_lookup_.find(p.source);
      const auto t = node_lookup_.find(p.target);
      if (s == node_lookup_.end())
        throw ParseError(concat("pipe '", p.id, "': dangling node reference '", p.source, "'"));
      if (t == node_lookup_.end())
        throw ParseError(concat("pipe '", p.id, "': dangling node reference '", p.target, "'"));
      if (!(p.length > 0.0) || !std::isfinite(p.length))
        throw ModelError(concat("pipe '", p.id, "': length must be positive"));
      if (!(p.radius > 0.0) || !std::isfinite(p.radius))
        throw ModelError(concat("pipe '", p.id, "': radius must be positive"));
      if (s->second == t->second)
        throw ModelError(concat("pipe '", p.id, "': self-loop at node '", p.source, "'"));
      source_.push_back(s->second);
      target_.push_back(t->second);
      out_[s->second].push_back(i);
      in_[t->second].push_back(i);
    }

    for (const Node& n : nodes_)
      if (n.role.kind == NodeKind::inlet && (!(n.role.flow_rate > 0.0) || !std::isfinite(n.role.flow_rate)))
        throw ModelError(concat("inlet node '", n.id, "': flow_rate must be positive"));

    std::size_t cycle_pipe = 0;
    order_ = detail::topological_sort(nodes_.size(), source_, target_, &cycle_pipe);
    if (order_.size() != nodes_.size())
      throw ModelError(concat("cycle detected through pipe '", pipes_[cycle_pipe].id, "'"));

    std::size_t inlets = 0, outlets = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      const std::size_t in = in_[i].size(), out = out_[i].size();
      switch (n.role.kind) {
        case NodeKind::inlet:
          ++inlets;
          if (in != 0 || out == 0)
            throw ModelError(concat("inlet node '", n.id, "' needs in-degree 0 and out-degree >= 1"));
          break;
        case NodeKind::outlet:
          ++outlets;
          if (out != 0 || in == 0)
            throw ModelError(concat("outlet node '", n.id, "' needs out-degree 0 and in-degree >= 1"));
          break;
        case NodeKind::connecting:
          if (in == 0 || out == 0)
            throw ModelError(concat("connecting node '", n.id, "' is a dead end"));
          break;
      }
    }
    if (inlets == 0) throw ModelError("network has no inlet node");
    if (outlets == 0) throw ModelError("network has no outlet node");

    // Weak connectivity.
    std::vector<bool> seen(nodes_.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t n = stack.back();
      stack.pop_back();
      auto visit = [&](std::size_t m) {
        if (!seen[m]) {
          seen[m] = true;
          ++reached;
          stack.push_back(m);
        }
      };
      for (std::size_t p : out_[n]) visit(target_[p]);
      for (std::size_t p : in_[n]) visit(source_[p]);
    }
    if (reached != nodes_.size()) {
      const auto it = std::find(seen.begin(), seen.end(), false);
      throw ModelError(concat("network is not connected: node '",
                              nodes_[static_cast<std::size_t>(it - seen.begin())].id,
                              "' is unreachable"));
    }
  }

  std::vector<Node> nodes_;
  std::vector<Pipe> pipes_;
  double diffusion_;
  double viscosity_;

  std::unordered_map<std::string, std::size_t> node_lookup_;
  std::unordered_map<std::string, std::size_t> pipe_lookup_;
  std::vector<std::size_t> source_, target_;
  std::vector<std::vector<std::size_t>> out_, in_;
  std::vector<std::size_t> order_;
};

/// Topological order of node ids. Construction already rejects cyclic
/// networks, so on a VesselNetwork this cannot fail.
inline std::vector<std::string> validate_dag(const VesselNetwork& network) {
  std::vector<std::string> ids;
  ids.reserve(network.node_count());
  for (std::size_t n : network.topological_order()) ids.push_back(network.node(n).id);
  return ids;
}

/// Transmitter and receiver placement inside the network.
struct TxRxPlacement {
  std::string tx_pipe;
  double tx_position = 0.0;  // m, along tx_pipe
  std::string rx_pipe;
  double rx_position = 0.0;  // m, centre of the Rx window along rx_pipe
  double rx_length = 0.0;    // m
  std::uint64_t released_molecules = 1;

  friend bool operator==(const TxRxPlacement&, const TxRxPlacement&) = default;
};

inline void validate_placement(const VesselNetwork& network, const TxRxPlacement& placement) {
  using detail::concat;
  const Pipe& tx = network.pipe(network.pipe_index(placement.tx_pipe));
  const Pipe& rx = network.pipe(network.pipe_index(placement.rx_pipe));
  if (!(placement.tx_position >= 0.0 && placement.tx_position <= tx.length))
    throw ModelError(concat("tx position ", placement.tx_position, " outside pipe '", tx.id,
                            "' of length ", tx.length));
  if (!(placement.rx_position >= 0.0 && placement.rx_position <= rx.length))
    throw ModelError(concat("rx position ", placement.rx_position, " outside pipe '", rx.id,
                            "' of length ", rx.length));
  if (!(placement.rx_length > 0.0) || !std::isfinite(placement.rx_length))
    throw ModelError("rx length must be positive");
  const double half = 0.5 * placement.rx_length;
  if (placement.rx_position - half < 0.0 || placement.rx_position + half > rx.length)
    throw ModelError(concat("rx window [", placement.rx_position - half, ", ",
                            placement.rx_position + half, "] does not fit inside pipe '", rx.id,
                            "'"));
  if (placement.released_molecules < 1) throw ModelError("tx must release at least one molecule");
}

/// A parsed network file.
struct NetworkDocument {
  VesselNetwork network;
  TxRxPlacement placement;

  friend bool operator==(const NetworkDocument&, const NetworkDocument&) = default;
};

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(concat(where, " must be an object"));
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(concat(where, ": missing field '", key, "'"));
  return *it;
}

inline double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw ParseError(concat(where, ": field '", key, "' must be a number"));
  return v.get<double>();
}

inline std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw ParseError(concat(where, ": field '", key, "' must be a string"));
  return v.get<std::string>();
}

inline const json& require_array(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_array()) throw ParseError(concat(where, ": field '", key, "' must be an array"));
  return v;
}

}  // namespace detail

/// Parses and fully validates a network document.
inline NetworkDocument parse_network(std::string_view text) {
  using detail::concat;
  detail::json doc;
  try {
    doc = detail::json::parse(text.begin(), text.end());
  } catch (const detail::json::parse_error& e) {
    throw ParseError(concat("invalid JSON: ", e.what()));
  }
  if (!doc.is_object()) throw ParseError("document must be a JSON object");

  const double diffusion = detail::require_number(doc, "diffusion", "document");
  double viscosity = 1.0;
  if (doc.contains("viscosity")) viscosity = detail::require_number(doc, "viscosity", "document");

  std::vector<Node> nodes;
  const auto& node_array = detail::require_array(doc, "nodes", "document");
  for (std::size_t i = 0; i < node_array.size(); ++i) {
    const std::string where = concat("nodes[", i, "]");
    const auto& n = node_array[i];
    Node node;
    node.id = detail::require_string(n, "id", where);
    const std::string role = detail::require_string(n, "role", where);
    if (role == "inlet") {
      node.role = NodeRole::inlet(detail::require_number(n, "flow_rate", where));
    } else if (role == "outlet") {
      node.role = NodeRole::outlet();
    } else if (role == "connecting") {
      node.role = NodeRole::connecting();
    } else {
      throw ParseError(concat(where, ": unknown role '", role, "'"));
    }
    nodes.push_back(std::move(node));
  }

  std::vector<Pipe> pipes;
  const auto& pipe_array = detail::require_array(doc, "pipes", "document");
  for (std::size_t i = 0; i < pipe_array.size(); ++i) {
    const std::string where = concat("pipes[", i, "]");
    const auto& p = pipe_array[i];
    pipes.push_back(Pipe{detail::require_string(p, "id", where),
                         detail::require_string(p, "source", where),
                         detail::require_string(p, "target", where),
                         detail::require_number(p, "length", where),
                         detail::require_number(p, "radius", where)});
  }

  VesselNetwork network(std::move(nodes), std::move(pipes), diffusion, viscosity);

  const auto& tx = detail::require(doc, "tx", "document");
  const auto& rx = detail::require(doc, "rx", "document");
  TxRxPlacement placement;
  placement.tx_pipe = detail::require_string(tx, "pipe", "tx");
  placement.tx_position = detail::require_number(tx, "z", "tx");
  const auto& molecules = detail::require(tx, "molecules", "tx");
  if (!molecules.is_number_integer())
    throw ParseError("tx: field 'molecules' must be an integer");
  if (molecules.is_number_unsigned() || molecules.get<std::int64_t>() >= 1)
    placement.released_molecules = molecules.get<std::uint64_t>();
  else
    throw ModelError("tx must release at least one molecule");
  placement.rx_pipe = detail::require_string(rx, "pipe", "rx");
  placement.rx_position = detail::require_number(rx, "z", "rx");
  placement.rx_length = detail::require_number(rx, "length", "rx");

  validate_placement(network, placement);
  return NetworkDocument{std::move(network), std::move(placement)};
}

inline NetworkDocument load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(detail::concat("cannot open network file '", path.string(), "'"));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

/// Serializes a document back to the network-file format.
inline std::string serialize_network(const NetworkDocument& doc) {
  detail::json out;
  out["diffusion"] = doc.network.diffusion();
  if (doc.network.viscosity() != 1.0) out["viscosity"] = doc.network.viscosity();
  auto nodes = detail::json::array();
  for (const Node& n : doc.network.nodes()) {
    detail::json j{{"id", n.id}, {"role", std::string(to_string(n.role.kind))}};
    if (n.role.kind == NodeKind::inlet) j["flow_rate"] = n.role.flow_rate;
    nodes.push_back(std::move(j));
  }
  out["nodes"] = std::move(nodes);
  auto pipes = detail::json::array();
  for (const Pipe& p : doc.network.pipes())
    pipes.push_back({{"id", p.id},
                     {"source", p.source},
                     {"target", p.target},
                     {"length", p.length},
                     {"radius", p.radius}});
  out["pipes"] = std::move(pipes);
  out["tx"] = {{"pipe", doc.placement.tx_pipe},
               {"z", doc.placement.tx_position},
               {"molecules", doc.placement.released_molecules}};
  out["rx"] = {{"pipe", doc.placement.rx_pipe},
               {"z", doc.placement.rx_position},
               {"length", doc.placement.rx_length}};
  return out.dump(2);
}

}  // namespace vasculink
