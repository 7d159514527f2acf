#include "permitbft/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace permitbft {

using nlohmann::json;

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kSilent:
      return "silent";
    case StrategyKind::kCrashAt:
      return "crash_at";
    case StrategyKind::kEquivocateBlocks:
      return "equivocate_blocks";
    case StrategyKind::kWithholdFrom:
      return "withhold_from";
    case StrategyKind::kStalePermit:
      return "stale_permit";
    case StrategyKind::kSpamTimeouts:
      return "spam_timeouts";
    case StrategyKind::kCustom:
      return "custom";
  }
  return "unknown";
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ParseError("field '" + field + "': " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) field_error(path + key, "missing");
  return obj.at(key);
}

template <typename T>
T get_num(const json& v, const std::string& field) {
  if (!v.is_number_integer()) field_error(field, "expected integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) field_error(field, "negative");
  }
  return v.get<T>();
}

template <typename T>
T opt_num(const json& obj, const std::string& key, T fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  return get_num<T>(obj.at(key), path + key);
}

bool opt_bool(const json& obj, const std::string& key, bool fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) field_error(path + key, "expected boolean");
  return obj.at(key).get<bool>();
}

std::string get_str(const json& v, const std::string& field) {
  if (!v.is_string()) field_error(field, "expected string");
  return v.get<std::string>();
}

const json& get_array(const json& obj, const std::string& key, const std::string& path) {
  static const json kEmpty = json::array();
  if (!obj.contains(key)) return kEmpty;
  if (!obj.at(key).is_array()) field_error(path + key, "expected array");
  return obj.at(key);
}

NodeId get_node(const json& v, const std::string& field, std::uint32_t n) {
  auto idx = get_num<std::uint32_t>(v, field);
  if (idx >= n) field_error(field, "node index out of range");
  return NodeId{idx};
}

std::vector<NodeId> get_nodes(const json& arr, const std::string& field, std::uint32_t n) {
  if (!arr.is_array()) field_error(field, "expected array");
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(get_node(arr[i], field + "[" + std::to_string(i) + "]", n));
  return out;
}

StrategyKind strategy_kind(const std::string& name, const std::string& field) {
  for (auto k : {StrategyKind::kSilent, StrategyKind::kCrashAt, StrategyKind::kEquivocateBlocks, StrategyKind::kWithholdFrom,
                 StrategyKind::kStalePermit, StrategyKind::kSpamTimeouts, StrategyKind::kCustom}) {
    if (to_string(k) == name) return k;
  }
  field_error(field, "unknown strategy '" + name + "'");
}

ScriptOp script_op(const std::string& name, const std::string& field) {
  if (name == "mute") return ScriptOp::kMute;
  if (name == "unmute") return ScriptOp::kUnmute;
  if (name == "timeout") return ScriptOp::kTimeout;
  if (name == "permit_genesis") return ScriptOp::kPermitGenesis;
  field_error(field, "unknown action '" + name + "'");
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("line 1: top level must be an object");

  Scenario s;
  s.digest = sha256(doc.dump());
  if (doc.contains("name")) s.name = get_str(doc.at("name"), "name");
  s.n = get_num<std::uint32_t>(require(doc, "n", ""), "n");
  s.f = get_num<std::uint32_t>(require(doc, "f", ""), "f");
  if (s.n == 0) throw ConstraintError("n must be positive");
  if (s.n < 3 * s.f + 1) {
    throw ConstraintError("n=" + std::to_string(s.n) + " f=" + std::to_string(s.f) + " violates n >= 3f+1");
  }

  if (doc.contains("timers")) {
    const auto& t = doc.at("timers");
    if (!t.is_object()) field_error("timers", "expected object");
    s.timers.delta = opt_num<Ticks>(t, "delta", s.timers.delta, "timers.");
    s.timers.creator_timeout = opt_num<Ticks>(t, "creator_timeout", s.timers.creator_timeout, "timers.");
    s.timers.round_timeout = opt_num<Ticks>(t, "round_timeout", s.timers.round_timeout, "timers.");
  }
  if (doc.contains("delay")) {
    auto mode = get_str(doc.at("delay"), "delay");
    if (mode == "uniform") {
      s.delay_mode = DelayMode::kUniform;
    } else if (mode == "fixed") {
      s.delay_mode = DelayMode::kFixed;
    } else {
      field_error("delay", "expected 'uniform' or 'fixed'");
    }
  }

  const auto& phases = get_array(doc, "phases", "");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const std::string path = "phases[" + std::to_string(i) + "].";
    SynchronyPhase p;
    p.start = get_num<Ticks>(require(phases[i], "start", path), path + "start");
    p.end = get_num<Ticks>(require(phases[i], "end", path), path + "end");
    auto mode = get_str(require(phases[i], "mode", path), path + "mode");
    if (mode != "sync" && mode != "async") field_error(path + "mode", "expected 'sync' or 'async'");
    p.synchronous = mode == "sync";
    s.phases.push_back(p);
  }

  const auto& parts = get_array(doc, "partitions", "");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string path = "partitions[" + std::to_string(i) + "].";
    Partition p;
    p.start = get_num<Ticks>(require(parts[i], "start", path), path + "start");
    p.end = get_num<Ticks>(require(parts[i], "end", path), path + "end");
    const auto& groups = require(parts[i], "groups", path);
    if (!groups.is_array()) field_error(path + "groups", "expected array");
    for (std::size_t g = 0; g < groups.size(); ++g) {
      p.groups.push_back(get_nodes(groups[g], path + "groups[" + std::to_string(g) + "]", s.n));
    }
    s.partitions.push_back(std::move(p));
  }

  const auto& mints = get_array(doc, "mints", "");
  for (std::size_t i = 0; i < mints.size(); ++i) {
    const std::string path = "mints[" + std::to_string(i) + "].";
    auto owner = get_str(require(mints[i], "owner", path), path + "owner");
    auto amount = get_num<std::uint64_t>(require(mints[i], "amount", path), path + "amount");
    s.mints.push_back(Transaction::mint(owner, amount, i));
  }

  std::map<std::string, Transaction> by_label;
  const auto& txs = get_array(doc, "txs", "");
  for (std::size_t i = 0; i < txs.size(); ++i) {
    const std::string path = "txs[" + std::to_string(i) + "].";
    const auto& t = txs[i];
    const auto at = get_num<Ticks>(require(t, "at", path), path + "at");
    const auto to = get_node(require(t, "to", path), path + "to", s.n);
    auto label = t.contains("label") ? get_str(t.at("label"), path + "label") : "tx" + std::to_string(i);
    std::vector<OutputRef> inputs;
    const auto& ins = require(t, "inputs", path);
    if (!ins.is_array() || ins.empty()) field_error(path + "inputs", "expected non-empty array");
    for (std::size_t k = 0; k < ins.size(); ++k) {
      const std::string ip = path + "inputs[" + std::to_string(k) + "].";
      if (ins[k].contains("mint")) {
        auto m = get_num<std::size_t>(ins[k].at("mint"), ip + "mint");
        if (m >= s.mints.size()) field_error(ip + "mint", "no such mint");
        inputs.push_back(OutputRef{s.mints[m].id(), 0});
      } else {
        auto label = get_str(require(ins[k], "tx", ip), ip + "tx");
        auto src = by_label.find(label);
        if (src == by_label.end()) field_error(ip + "tx", "must name an earlier transaction");
        auto index = opt_num<std::uint32_t>(ins[k], "index", 0, ip);
        if (index >= src->second.outputs().size()) field_error(ip + "index", "no such output");
        inputs.push_back(OutputRef{src->second.id(), index});
      }
    }
    std::vector<TxOutput> outputs;
    const auto& outs = require(t, "outputs", path);
    if (!outs.is_array()) field_error(path + "outputs", "expected array");
    for (std::size_t k = 0; k < outs.size(); ++k) {
      const std::string op = path + "outputs[" + std::to_string(k) + "].";
      outputs.push_back(TxOutput{get_str(require(outs[k], "owner", op), op + "owner"),
                                 get_num<std::uint64_t>(require(outs[k], "amount", op), op + "amount")});
    }
    Transaction tx(std::move(inputs), std::move(outputs), opt_num<std::uint64_t>(t, "nonce", 0, path));
    if (!by_label.emplace(label, tx).second) field_error(path + "label", "duplicate label");
    s.txs.push_back(TxInjection{at, to, std::move(label), std::move(tx)});
  }

  const auto& byz = get_array(doc, "byzantine", "");
  for (std::size_t i = 0; i < byz.size(); ++i) {
    const std::string path = "byzantine[" + std::to_string(i) + "].";
    const auto& b = byz[i];
    auto node = get_node(require(b, "node", path), path + "node", s.n);
    AdversaryStrategy st;
    st.kind = strategy_kind(get_str(require(b, "strategy", path), path + "strategy"), path + "strategy");
    st.crash_round = Round{opt_num<std::uint64_t>(b, "round", 0, path)};
    st.variants = opt_num<std::uint32_t>(b, "variants", 2, path);
    if (st.variants == 0) field_error(path + "variants", "must be positive");
    const auto& groups = get_array(b, "groups", path);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      st.groups.push_back(get_nodes(groups[g], path + "groups[" + std::to_string(g) + "]", s.n));
    }
    st.permit_variant = opt_num<std::uint32_t>(b, "permit_variant", 0, path);
    const auto& vtx = get_array(b, "variant_txs", path);
    for (std::size_t v = 0; v < vtx.size(); ++v) {
      const std::string vp = path + "variant_txs[" + std::to_string(v) + "]";
      if (!vtx[v].is_array()) field_error(vp, "expected array of labels");
      std::vector<Transaction> list;
      for (const auto& label : vtx[v]) {
        auto it = by_label.find(get_str(label, vp));
        if (it == by_label.end()) field_error(vp, "unknown transaction label");
        list.push_back(it->second);
      }
      st.variant_txs.push_back(std::move(list));
    }
    if (b.contains("targets")) st.targets = get_nodes(b.at("targets"), path + "targets", s.n);
    st.lag = opt_num<std::uint32_t>(b, "lag", 1, path);
    st.ahead = opt_num<std::uint32_t>(b, "ahead", 2, path);
    const auto& script = get_array(b, "script", path);
    for (std::size_t k = 0; k < script.size(); ++k) {
      const std::string sp = path + "script[" + std::to_string(k) + "].";
      ScriptStep step;
      step.round = Round{get_num<std::uint64_t>(require(script[k], "round", sp), sp + "round")};
      step.op = script_op(get_str(require(script[k], "action", sp), sp + "action"), sp + "action");
      st.script.push_back(step);
    }
    if (!s.byzantine.emplace(node, std::move(st)).second) field_error(path + "node", "listed twice");
  }

  s.horizon = opt_num<Ticks>(doc, "horizon", s.horizon, "");
  s.seed = opt_num<std::uint64_t>(doc, "seed", 0, "");
  if (doc.contains("checks")) {
    const auto& c = doc.at("checks");
    if (!c.is_object()) field_error("checks", "expected object");
    s.checks.safety = opt_bool(c, "safety", true, "checks.");
    s.checks.liveness = opt_bool(c, "liveness", false, "checks.");
    s.checks.latency = opt_bool(c, "latency", false, "checks.");
    s.checks.msg_complexity = opt_bool(c, "msg_complexity", false, "checks.");
  }
  validate_scenario(s);
  return s;
}

void validate_scenario(const Scenario& s) {
  if (s.byzantine.size() > s.f) {
    throw ConstraintError(std::to_string(s.byzantine.size()) + " byzantine nodes exceed f=" + std::to_string(s.f));
  }
  if (s.timers.delta <= 0 || s.timers.creator_timeout <= 0 || s.timers.round_timeout <= 0) {
    throw ConstraintError("timers must be positive");
  }
  if (s.checks.liveness && !s.timers.liveness_bounds_hold()) {
    throw ConstraintError("timers violate 2*delta < creator_timeout < 3*delta < 5*delta < round_timeout");
  }
  if (s.horizon <= 0) throw ConstraintError("horizon must be positive");
  for (const auto& p : s.phases) {
    if (p.end <= p.start) throw ConstraintError("phase end must exceed start");
  }
  for (const auto& p : s.partitions) {
    if (p.end <= p.start) throw ConstraintError("partition end must exceed start");
    std::set<NodeId> seen;
    for (const auto& g : p.groups) {
      for (const auto& id : g) {
        if (!seen.insert(id).second) throw ConstraintError("node " + id.str() + " in two partition groups");
      }
    }
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::uint64_t resolve_seed(const Scenario& scenario, std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PERMITBFT_SEED"); env && *env) {
    char* end = nullptr;
    auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ParseError("PERMITBFT_SEED is not an unsigned integer");
    return v;
  }
  return scenario.seed;
}

}  // namespace permitbft
