#include "dmera/layout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dmera {

void AngleProfile::validate() const {
  if (depth < 2) throw std::invalid_argument("angle profile depth must be >= 2");
  if (static_cast<int>(thetas.size()) != depth)
    throw std::invalid_argument("angle profile needs exactly `depth` angles (got " + std::to_string(thetas.size()) +
                                " for depth " + std::to_string(depth) + ")");
  for (double t : thetas)
    if (!std::isfinite(t)) throw std::invalid_argument("angle profile contains a non-finite angle");
}

std::string AngleProfile::to_json() const {
  nlohmann::json j;
  j["depth"] = depth;
  j["thetas"] = thetas;
  j["variant"] = to_string(variant);
  return j.dump(2);
}

AngleProfile AngleProfile::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("angle profile is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("depth") || !j.contains("thetas"))
    throw std::invalid_argument("angle profile JSON needs \"depth\" and \"thetas\"");
  AngleProfile p;
  p.depth = j.at("depth").get<int>();
  p.thetas = j.at("thetas").get<std::vector<double>>();
  p.variant = j.contains("variant") ? parse_variant(j.at("variant").get<std::string>()) : Variant::C1;
  p.validate();
  return p;
}

AngleProfile AngleProfile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open angle file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void LayerCircuit::validate() const {
  std::vector<int> role(n_total, 0);
  for (int q : carried) role.at(q) |= 1;
  for (int q : prep) role.at(q) |= 2;
  for (int r : role)
    if (r != 1 && r != 2) throw InvariantError("layer circuit: every qubit must be either carried or freshly prepared");
  std::vector<int> fate(n_total, 0);
  for (int q : output_window) fate.at(q) |= 1;
  for (int q : discard) fate.at(q) |= 2;
  for (int f : fate)
    if (f != 1 && f != 2) throw InvariantError("layer circuit: output window and discard set must partition the qubits");
  for (std::size_t i = 1; i < output_window.size(); ++i)
    if (output_window[i] != output_window[i - 1] + 1) throw InvariantError("layer circuit: output window not contiguous");
  if (carried.size() != input_index.size()) throw InvariantError("layer circuit: carried/input_index size mismatch");
  for (int s : input_index)
    if (s < 0 || s >= n_in) throw InvariantError("layer circuit: input slot out of range");
}

LayerCircuit build_scale_layer(const AngleProfile& profile, int width) {
  profile.validate();
  if (width < 4 || width % 2 != 0) throw std::invalid_argument("scale layer width must be even and >= 4");
  LayerCircuit c;
  c.n_total = width;
  c.n_in = width / 2;
  c.variant = profile.variant;
  for (int i = 0; i < width; i += 2) {
    c.prep.push_back(i);
    c.carried.push_back(i + 1);
    c.input_index.push_back(i / 2);
  }
  for (int i = 0; i < width; i += 2) c.gates.push_back({GateKind::W, profile.thetas[0], {i, i + 1}});
  for (int d = 1; d < profile.depth; ++d) {
    const int offset = d % 2;  // brickwork alternates starting one site over from W
    for (int i = offset; i + 1 < width; i += 2) c.gates.push_back({GateKind::U, profile.thetas[d], {i, i + 1}});
  }
  for (int i = 0; i < width; ++i) c.output_window.push_back(i);
  return c;
}

LayerCircuit prune_to_window(const LayerCircuit& full, const std::vector<int>& window) {
  std::set<int> active(window.begin(), window.end());
  std::vector<LayerGate> kept;
  for (auto it = full.gates.rbegin(); it != full.gates.rend(); ++it) {
    if (active.count(it->qubits[0]) || active.count(it->qubits[1])) {
      kept.push_back(*it);
      active.insert(it->qubits[0]);
      active.insert(it->qubits[1]);
    }
  }
  std::reverse(kept.begin(), kept.end());
  // Fresh preparations end a qubit's past; carried qubits reach the input.
  const int lo = *active.begin();
  const int hi = *active.rbegin();
  if (hi - lo + 1 != static_cast<int>(active.size())) throw InvariantError("causal cone is not contiguous");
  for (int q : window)
    if (q < 0 || q >= full.n_total) throw std::invalid_argument("window outside the layer");
  LayerCircuit c;
  c.n_total = hi - lo + 1;
  c.variant = full.variant;
  c.convention = full.convention;
  c.first_site = full.first_site + lo;
  const std::set<int> prep(full.prep.begin(), full.prep.end());
  std::map<int, int> slot;
  for (std::size_t i = 0; i < full.carried.size(); ++i) slot[full.carried[i]] = full.input_index[i];
  int min_slot = 1 << 30;
  for (int q = lo; q <= hi; ++q) {
    if (prep.count(q)) {
      c.prep.push_back(q - lo);
    } else {
      c.carried.push_back(q - lo);
      c.input_index.push_back(slot.at(q));
      min_slot = std::min(min_slot, slot.at(q));
    }
  }
  for (int& s : c.input_index) s -= min_slot;
  c.n_in = static_cast<int>(c.carried.size());
  for (auto g : kept) {
    g.qubits = {g.qubits[0] - lo, g.qubits[1] - lo};
    c.gates.push_back(g);
  }
  std::set<int> win(window.begin(), window.end());
  for (int q = lo; q <= hi; ++q) {
    if (win.count(q))
      c.output_window.push_back(q - lo);
    else
      c.discard.push_back(q - lo);
  }
  c.validate();
  return c;
}

int channel_width(int depth) {
  if (depth < 2) throw std::invalid_argument("depth must be >= 2");
  return 2 * depth - 1;
}

LayerCircuit causal_cone(const AngleProfile& profile, int n_out, Side side) {
  profile.validate();
  if (n_out < 1) throw std::invalid_argument("causal cone needs n_out >= 1");
  // Generous embedding so the cone never reaches the open boundary.
  int width = 4 * n_out + 2 * profile.depth + 8;
  width += (4 - width % 4) % 4;
  const LayerCircuit full = build_scale_layer(profile, width);
  int start = width / 2 - n_out / 2;
  const bool want_odd = side == Side::Left;
  if ((start % 2 == 1) != want_odd) ++start;
  std::vector<int> window;
  for (int i = 0; i < n_out; ++i) window.push_back(start + i);
  LayerCircuit cone = prune_to_window(full, window);
  if (cone.first_site == 0 || cone.first_site + cone.n_total == width)
    throw InvariantError("causal cone reached the embedding boundary");

  // Place the carried qubits in an n_out-wide coarse window centred under the
  // output window: choose k0 minimising |(start - 2 k0) - n_out/2|.
  std::vector<int> coarse;
  for (int q : cone.carried) coarse.push_back((q + cone.first_site - 1) / 2);
  int best_k0 = 0;
  double best = 1e300;
  for (int k0 = start / 2 - n_out; k0 <= start / 2 + n_out; ++k0) {
    const double dist = std::abs((start - 2 * k0) - n_out / 2.0);
    if (dist < best - 1e-12) {
      best = dist;
      best_k0 = k0;
    }
  }
  const bool fits = std::all_of(coarse.begin(), coarse.end(), [&](int k) { return k >= best_k0 && k < best_k0 + n_out; });
  if (fits) {
    cone.n_in = n_out;
    for (std::size_t i = 0; i < coarse.size(); ++i) cone.input_index[i] = coarse[i] - best_k0;
  }
  cone.validate();
  return cone;
}

LayerCircuit mirror(const LayerCircuit& c) {
  LayerCircuit m = c;
  const int last = c.n_total - 1;
  auto flip = [last](int q) { return last - q; };
  for (auto& g : m.gates) g.qubits = {flip(g.qubits[0]), flip(g.qubits[1])};
  for (auto& q : m.prep) q = flip(q);
  std::sort(m.prep.begin(), m.prep.end());
  // Reverse carried order so input slots stay increasing with position.
  m.carried.clear();
  m.input_index.clear();
  for (std::size_t i = c.carried.size(); i-- > 0;) {
    m.carried.push_back(flip(c.carried[i]));
    m.input_index.push_back(c.n_in - 1 - c.input_index[i]);
  }
  m.output_window.clear();
  for (auto it = c.output_window.rbegin(); it != c.output_window.rend(); ++it) m.output_window.push_back(flip(*it));
  for (auto& q : m.discard) q = flip(q);
  std::sort(m.discard.begin(), m.discard.end());
  return m;
}

LayerCircuit swap_convention(const LayerCircuit& circuit) {
  LayerCircuit s = circuit;
  s.convention = circuit.convention == Convention::XX ? Convention::ZZ : Convention::XX;
  return s;
}

GateCounts gate_counts(const AngleProfile& profile, int n_out, int n_layers) {
  profile.validate();
  if (n_layers < 0) throw std::invalid_argument("n_layers must be >= 0");
  if (n_layers == 0) return {};
  const LayerCircuit cone = causal_cone(profile, n_out, Side::Left);
  long ms = 0, single = 0;
  for (const auto& g : cone.gates) {
    for (const auto& ng : decompose_gate(g.kind, g.theta, profile.variant)) {
      if (ng.is_ms())
        ++ms;
      else
        ++single;
    }
  }
  single += static_cast<long>(cone.prep.size());
  GateCounts counts;
  counts.ms_gates = ms * n_layers;
  counts.single_qubit_gates = single * n_layers;
  counts.resets = static_cast<long>(cone.prep.size()) * (n_layers - 1);
  return counts;
}

}  // namespace dmera
