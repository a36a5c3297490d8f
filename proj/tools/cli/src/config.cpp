#include "ddocp/cli/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "json.hpp"

#include "ddocp/errors.hpp"

namespace ddocp::cli {

namespace {

using nlohmann::json;

std::string pointer_string(const rapidjson::Pointer& p) {
  rapidjson::StringBuffer sb;
  p.Stringify(sb);
  std::string s = sb.GetString();
  return s.empty() ? "/" : s;
}

// additionalProperties violations point either at the object or at the
// member itself, depending on the RapidJSON version.
std::string unknown_key(const rapidjson::Value& object, const rapidjson::Value* schema) {
  if (!object.IsObject() || schema == nullptr || !schema->IsObject()) return {};
  const auto props = schema->FindMember("properties");
  for (auto it = object.MemberBegin(); it != object.MemberEnd(); ++it) {
    if (props == schema->MemberEnd() || !props->value.HasMember(it->name)) return it->name.GetString();
  }
  return {};
}

void validate_schema(const std::string& text, const std::string& source) {
  static const rapidjson::Document schema_doc = [] {
    rapidjson::Document d;
    const std::string schema(config_schema());
    d.Parse(schema.c_str());
    if (d.HasParseError()) throw std::logic_error("embedded config schema is not valid JSON");
    return d;
  }();
  static const rapidjson::SchemaDocument schema(schema_doc);

  rapidjson::Document doc;
  doc.Parse(text.c_str());
  if (doc.HasParseError()) {
    throw ConfigFailure(source + ": " + rapidjson::GetParseError_En(doc.GetParseError()) + " at offset " +
                        std::to_string(doc.GetErrorOffset()));
  }
  rapidjson::SchemaValidator validator(schema);
  if (doc.Accept(validator)) return;

  const std::string keyword = validator.GetInvalidSchemaKeyword();
  const rapidjson::Pointer doc_ptr = validator.GetInvalidDocumentPointer();
  const std::string where = pointer_string(doc_ptr);
  if (keyword == "additionalProperties") {
    const rapidjson::Value* object = doc_ptr.Get(doc);
    const rapidjson::Value* sub = validator.GetInvalidSchemaPointer().Get(schema_doc);
    std::string key = object ? unknown_key(*object, sub) : std::string();
    std::string parent = where;
    if (key.empty() && doc_ptr.GetTokenCount() > 0) {
      const auto& last = doc_ptr.GetTokens()[doc_ptr.GetTokenCount() - 1];
      key.assign(last.name, last.length);
      parent = pointer_string(rapidjson::Pointer(doc_ptr.GetTokens(), doc_ptr.GetTokenCount() - 1));
    }
    throw ConfigFailure(source + ": unknown key \"" + key + "\" in " + parent);
  }
  throw ConfigFailure(source + ": " + where + " violates schema keyword \"" + keyword + "\" (see --print-schema)");
}

SegmentMode parse_mode(const std::string& m) {
  return m == "linear" ? SegmentMode::kLinear : SegmentMode::kHold;
}

Bounds parse_bounds(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

template <class T>
void read(const json& parent, const char* key, T& out) {
  if (parent.contains(key)) out = parent.at(key).get<T>();
}

void apply_params(const json& j, msr::Params& p) {
  if (j.contains("decay")) p.decay = j.at("decay").get<std::array<double, msr::kGroups>>();
  if (j.contains("fractions")) p.fractions = j.at("fractions").get<std::array<double, msr::kGroups>>();
  read(j, "generation_time", p.generation_time);
  read(j, "specific_heat", p.specific_heat);
  read(j, "hx_conductance", p.hx_conductance);
  read(j, "feedback", p.feedback);
  read(j, "salt_density", p.salt_density);
  read(j, "reactor_mass", p.reactor_mass);
  read(j, "hx_mass", p.hx_mass);
  read(j, "core_volume", p.core_volume);
  read(j, "pipe_length", p.pipe.length);
  read(j, "pipe_radius", p.pipe.radius);
  read(j, "coolant_temperature", p.coolant_temperature);
  read(j, "nominal_power", p.nominal_power);
  read(j, "nominal_neutrons", p.nominal_neutrons);
}

void check_bounds(const Bounds& b, const char* what) {
  if (!(b.lower < b.upper)) {
    throw ConfigFailure(std::string("/ocp/bounds/") + what + ": lower bound " + std::to_string(b.lower) +
                        " is not below upper bound " + std::to_string(b.upper));
  }
}

}  // namespace

SetpointProfile ScenarioConfig::effective_setpoint() const {
  return setpoint.knots().empty() ? SetpointProfile::constant(power) : setpoint;
}

double ScenarioConfig::pressure_drop() const {
  return msr::pressure_drop_for_velocity(average_velocity, params);
}

double ScenarioConfig::simulation_horizon() const {
  return horizon > 0.0 ? horizon : grid.final_time() - grid.t0;
}

double ScenarioConfig::approx_simulation_step() const {
  return approx_step > 0.0 ? approx_step : grid.step();
}

OcpSpec ScenarioConfig::ocp_spec() const {
  check_bounds(velocity_bounds, "average_velocity");
  check_bounds(reactivity_bounds, "external_reactivity");
  check_bounds(temperature_bounds, "temperature");
  check_bounds(thermal_reactivity_bounds, "thermal_reactivity");
  if (!(velocity_bounds.lower > 0.0)) throw ConfigFailure("/ocp/bounds/average_velocity: lower bound must be positive");

  msr::ScenarioDefaults d;
  d.reference_velocity = average_velocity;
  d.reference_reactivity_pcm = external_reactivity_pcm;
  d.tracking_weight = tracking_weight;
  d.reactivity_move_weight = reactivity_move_weight;
  d.pressure_move_weight = pressure_move_weight;
  try {
    OcpSpec spec = msr::ramp_spec(params, effective_setpoint(), grid.t0, d);
    spec.input_lower << reactivity_bounds.lower, msr::pressure_drop_for_velocity(velocity_bounds.lower, params);
    spec.input_upper << reactivity_bounds.upper, msr::pressure_drop_for_velocity(velocity_bounds.upper, params);
    spec.state_lower[msr::kTr] = spec.state_lower[msr::kThx] = temperature_bounds.lower;
    spec.state_upper[msr::kTr] = spec.state_upper[msr::kThx] = temperature_bounds.upper;
    spec.state_lower[msr::kRhoTh] = thermal_reactivity_bounds.lower;
    spec.state_upper[msr::kRhoTh] = thermal_reactivity_bounds.upper;
    const Vector& u = spec.reference_input;
    if ((u.array() <= spec.input_lower.array()).any() || (u.array() >= spec.input_upper.array()).any()) {
      throw ConfigFailure("/operating_point: reference input lies outside /ocp/bounds");
    }
    return spec;
  } catch (const DomainError& e) {
    throw ConfigFailure(std::string("inconsistent OCP settings: ") + e.what());
  } catch (const SolverError& e) {
    throw ConfigFailure(std::string("no steady state for the initial setpoint: ") + e.what());
  }
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigFailure(source + ": " + e.what());
  }
  validate_schema(text, source);

  ScenarioConfig c;
  if (j.contains("model") && j["model"].contains("params")) apply_params(j["model"]["params"], c.params);
  if (j.contains("kernel")) {
    const json& k = j["kernel"];
    read(k, "viscosity", c.params.viscosity);
    read(k, "points", c.kernel_points);
    read(k, "samples", c.kernel_samples);
    read(k, "max_lag_factor", c.max_lag_factor);
  }
  c.simulation.kernel_points = c.kernel_points;
  if (j.contains("operating_point")) {
    const json& o = j["operating_point"];
    read(o, "power", c.power);
    read(o, "average_velocity", c.average_velocity);
    read(o, "external_reactivity", c.external_reactivity_pcm);
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    read(g, "t0", c.grid.t0);
    read(g, "dt", c.grid.dt);
    read(g, "intervals", c.grid.intervals);
    read(g, "steps", c.grid.steps);
  }
  if (j.contains("ocp")) {
    const json& o = j["ocp"];
    read(o, "tracking_weight", c.tracking_weight);
    if (o.contains("move_weights")) {
      read(o["move_weights"], "external_reactivity", c.reactivity_move_weight);
      read(o["move_weights"], "pressure_drop", c.pressure_move_weight);
    }
    if (o.contains("setpoint")) {
      std::vector<SetpointProfile::Knot> knots;
      for (const json& k : o["setpoint"]) {
        knots.push_back({k.at("time").get<double>(), k.at("power").get<double>(),
                         parse_mode(k.value("mode", std::string("hold")))});
      }
      try {
        c.setpoint = SetpointProfile(std::move(knots));
      } catch (const DomainError& e) {
        throw ConfigFailure(source + ": /ocp/setpoint: " + e.what());
      }
    }
    if (o.contains("bounds")) {
      const json& b = o["bounds"];
      if (b.contains("average_velocity")) c.velocity_bounds = parse_bounds(b["average_velocity"]);
      if (b.contains("external_reactivity")) c.reactivity_bounds = parse_bounds(b["external_reactivity"]);
      if (b.contains("temperature")) c.temperature_bounds = parse_bounds(b["temperature"]);
      if (b.contains("thermal_reactivity")) c.thermal_reactivity_bounds = parse_bounds(b["thermal_reactivity"]);
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    read(s, "tolerance", c.solver.tolerance);
    read(s, "max_iterations", c.solver.max_iterations);
    read(s, "initial_barrier", c.solver.barrier_initial);
    read(s, "barrier_floor", c.solver.barrier_floor);
    read(s, "second_order_correction", c.solver.second_order_correction);
    read(s, "csv_log", c.csv_log);
  }
  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    read(s, "step", c.simulation.step);
    read(s, "kernel_points", c.simulation.kernel_points);
    read(s, "sample_interval", c.simulation.sample_interval);
    if (s.value("lag_semantics", std::string("observation")) == "emission") {
      c.simulation.lags = LagSemantics::kEmission;
    }
    read(s, "horizon", c.horizon);
    read(s, "approx_step", c.approx_step);
  }
  if (j.contains("stability")) {
    const json& s = j["stability"];
    read(s, "variants", c.stability_variants);
    if (s.contains("re")) {
      const Bounds b = parse_bounds(s["re"]);
      c.region.re_min = b.lower;
      c.region.re_max = b.upper;
    }
    if (s.contains("im")) {
      const Bounds b = parse_bounds(s["im"]);
      c.region.im_min = b.lower;
      c.region.im_max = b.upper;
    }
    read(s, "re_points", c.scan.re_points);
    read(s, "im_points", c.scan.im_points);
    read(s, "residual_tolerance", c.scan.residual_tolerance);
    if (!(c.region.re_min < c.region.re_max) || !(c.region.im_min < c.region.im_max)) {
      throw ConfigFailure(source + ": /stability: empty scan region");
    }
  }
  if (j.contains("output")) {
    c.output_directory = j["output"].value("directory", std::string("out"));
  }

  try {
    c.params.validate();
    c.grid.validate();
  } catch (const DomainError& e) {
    throw ConfigFailure(source + ": " + e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFailure("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace ddocp::cli
