#pragma once

// File formats: JSON network descriptions and arrival sequences, plus the CSV
// formatting helper used by the command-line tools (6 significant digits,
// deterministic).

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ehflow/errors.hpp"
#include "ehflow/network.hpp"
#include "ehflow/scheduler.hpp"

namespace ehflow {

inline RawNetwork parse_network_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  RawNetwork raw;
  try {
    for (const auto& n : j.at("nodes")) {
      RawNode node;
      node.id = n.at("id").get<std::string>();
      const auto& p = n.at("power");
      if (p.is_string()) {
        if (p.get<std::string>() != "unbounded")
          throw ParseError("power must be a number or \"unbounded\"");
        node.power = Power::infinite();
      } else {
        node.power = Power::finite(p.get<double>());
      }
      raw.nodes.push_back(node);
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("each edge must be a [from, to] pair");
      raw.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    raw.source = j.at("source").get<std::string>();
    raw.destination = j.at("destination").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  return raw;
}

inline DagNetwork load_network(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return validate(parse_network_json(ss.str()), warnings);
}

inline ArrivalSequence parse_arrivals_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  ArrivalSequence seq;
  try {
    for (const auto& ev : j.at("events")) {
      ArrivalEvent a;
      a.t = ev.at("t").get<double>();
      a.node = ev.at("node").get<std::string>();
      a.energy = ev.at("energy").get<double>();
      seq.events.push_back(a);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what());
  }
  seq.normalize();
  return seq;
}

inline ArrivalSequence load_arrivals(const std::string& path, const DagNetwork& net) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open arrivals file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_arrivals(net, parse_arrivals_json(ss.str()));
}

// Deterministic numeric formatting: 6 significant digits, '.' separator.
inline std::string format_number(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace ehflow
