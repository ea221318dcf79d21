#include "pbmrf/mrf_models.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "pbmrf/errors.hpp"

namespace pbmrf {

namespace {

// Class labels of every configuration of `width` binary cells under the group
// generated by the given cell permutations (and colour inversion if asked).
// Labels follow the order of `representatives`.
template <std::size_t W>
std::vector<int> enumerate_classes(const std::vector<std::array<int, W>>& generators,
                                   bool inversion, const std::vector<unsigned>& representatives,
                                   const char* what) {
  const unsigned count = 1U << W;
  const unsigned all = count - 1;
  auto permute = [](unsigned code, const std::array<int, W>& p) {
    unsigned out = 0;
    for (std::size_t k = 0; k < W; ++k) {
      if (code & (1U << k)) out |= 1U << p[k];
    }
    return out;
  };
  std::vector<int> orbit(count, -1);
  int orbits = 0;
  for (unsigned start = 0; start < count; ++start) {
    if (orbit[start] >= 0) continue;
    std::vector<unsigned> stack{start};
    orbit[start] = orbits;
    while (!stack.empty()) {
      const unsigned code = stack.back();
      stack.pop_back();
      std::vector<unsigned> images;
      for (const auto& g : generators) images.push_back(permute(code, g));
      if (inversion) images.push_back(code ^ all);
      for (unsigned img : images) {
        if (orbit[img] < 0) {
          orbit[img] = orbits;
          stack.push_back(img);
        }
      }
    }
    ++orbits;
  }
  if (static_cast<std::size_t>(orbits) != representatives.size()) {
    throw std::logic_error(std::string(what) + ": found " + std::to_string(orbits) +
                           " configuration classes, expected " +
                           std::to_string(representatives.size()));
  }
  std::vector<int> relabel(static_cast<std::size_t>(orbits), -1);
  for (std::size_t k = 0; k < representatives.size(); ++k) {
    int& slot = relabel[static_cast<std::size_t>(orbit[representatives[k]])];
    if (slot >= 0) throw std::logic_error(std::string(what) + ": duplicate representative");
    slot = static_cast<int>(k);
  }
  std::vector<int> out(count);
  for (unsigned code = 0; code < count; ++code) {
    out[code] = relabel[static_cast<std::size_t>(orbit[code])];
  }
  return out;
}

// Square cells: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right.
constexpr std::array<int, 4> kSquareRotate{1, 3, 0, 2};
constexpr std::array<int, 4> kSquareReflect{1, 0, 3, 2};
// Cross cells: 0 centre, 1 up, 2 right, 3 down, 4 left.
constexpr std::array<int, 5> kCrossRotate{0, 2, 3, 4, 1};
constexpr std::array<int, 5> kCrossReflect{0, 1, 4, 3, 2};

const std::vector<int>& square_table() {
  static const auto table = enumerate_classes<4>({kSquareRotate, kSquareReflect}, true,
                                                 {0b0000, 0b0001, 0b0011, 0b1001}, "2x2 clique");
  return table;
}

const std::vector<int>& cross_table() {
  static const auto table = enumerate_classes<5>(
      {kCrossRotate, kCrossReflect}, true,
      {0b00000, 0b00001, 0b00010, 0b00110, 0b00011, 0b01010}, "cross clique");
  return table;
}

const std::vector<int>& rotation_table() {
  static const auto table = enumerate_classes<4>(
      {kSquareRotate}, false, {0b0000, 0b0001, 0b0011, 0b1001, 0b0111, 0b1111}, "rotation");
  return table;
}

void add_clique_potential(PseudoBooleanFunction& energy, std::span<const Index> vars,
                          const std::vector<double>& value_by_code) {
  std::vector<double> coeffs = value_by_code;
  mobius_transform(coeffs);
  accumulate_interactions(energy, vars, coeffs);
}

MarkovRandomField make_field(const LatticeSpec& lat, ModelFamily family,
                             std::vector<double> params) {
  if (lat.rows == 0 || lat.cols == 0) {
    throw InvalidArgument("lattice must have at least one row and one column");
  }
  MarkovRandomField m;
  m.lattice = lat;
  m.graph = NeighbourhoodSystem(lat.size());
  m.energy = PseudoBooleanFunction(lat.size());
  m.family = family;
  m.params = std::move(params);
  return m;
}

void connect_within(MarkovRandomField& m, int reach, bool manhattan) {
  const auto& lat = m.lattice;
  for (std::size_t r = 0; r < lat.rows; ++r) {
    for (std::size_t c = 0; c < lat.cols; ++c) {
      for (int dr = 0; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
          if (dr == 0 && dc <= 0) continue;
          if (manhattan && dr + std::abs(dc) > reach) continue;
          const long rr = static_cast<long>(r) + dr;
          const long cc = static_cast<long>(c) + dc;
          if (rr >= static_cast<long>(lat.rows) || cc < 0 || cc >= static_cast<long>(lat.cols)) {
            continue;
          }
          m.graph.connect(lat.node(r, c),
                          lat.node(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)));
        }
      }
    }
  }
}

}  // namespace

void NeighbourhoodSystem::connect(Index a, Index b) {
  if (a == b) throw InvalidArgument("NeighbourhoodSystem: self neighbour");
  auto link = [](std::vector<Index>& list, Index v) {
    auto pos = std::lower_bound(list.begin(), list.end(), v);
    if (pos == list.end() || *pos != v) list.insert(pos, v);
  };
  link(neighbours.at(a), b);
  link(neighbours.at(b), a);
}

bool NeighbourhoodSystem::adjacent(Index a, Index b) const {
  const auto& list = neighbours.at(a);
  return std::binary_search(list.begin(), list.end(), b);
}

bool NeighbourhoodSystem::is_clique(const InteractionSet& s) const {
  for (std::size_t p = 0; p < s.size(); ++p) {
    for (std::size_t q = p + 1; q < s.size(); ++q) {
      if (!adjacent(s[p], s[q])) return false;
    }
  }
  return true;
}

void NeighbourhoodSystem::validate() const {
  if (neighbours.size() != n) throw InvalidArgument("NeighbourhoodSystem: size mismatch");
  for (Index a = 0; a < n; ++a) {
    const auto& list = neighbours[a];
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k] == a) throw InvalidArgument("NeighbourhoodSystem: self neighbour");
      if (k && list[k - 1] >= list[k]) throw InvalidArgument("NeighbourhoodSystem: unsorted");
      if (list[k] >= n || !adjacent(list[k], a)) {
        throw InvalidArgument("NeighbourhoodSystem: asymmetric neighbourhood");
      }
    }
  }
}

std::string_view family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::ising: return "ising";
    case ModelFamily::higher_order: return "higher_order";
    case ModelFamily::independence: return "independence";
    case ModelFamily::autologistic: return "autologistic";
    case ModelFamily::rotinv2x2: return "rotinv2x2";
  }
  return "unknown";
}

ModelFamily parse_family(std::string_view name) {
  for (auto f : {ModelFamily::ising, ModelFamily::higher_order, ModelFamily::independence,
                 ModelFamily::autologistic, ModelFamily::rotinv2x2}) {
    if (family_name(f) == name) return f;
  }
  throw InvalidArgument("unknown model family \"" + std::string(name) + "\"");
}

std::size_t family_arity(ModelFamily family) {
  switch (family) {
    case ModelFamily::ising: return 1;
    case ModelFamily::higher_order: return 10;
    case ModelFamily::independence: return 1;
    case ModelFamily::autologistic: return 2;
    case ModelFamily::rotinv2x2: return 5;
  }
  return 0;
}

int square_class(unsigned code) { return square_table().at(code); }
int cross_class(unsigned code) { return cross_table().at(code); }
int rotation_class(unsigned code) { return rotation_table().at(code); }
std::size_t square_class_count() {
  return static_cast<std::size_t>(*std::max_element(square_table().begin(), square_table().end()) + 1);
}
std::size_t cross_class_count() {
  return static_cast<std::size_t>(*std::max_element(cross_table().begin(), cross_table().end()) + 1);
}

std::vector<std::pair<Index, Index>> lattice_edges(const LatticeSpec& lat) {
  std::vector<std::pair<Index, Index>> out;
  for (std::size_t r = 0; r < lat.rows; ++r) {
    for (std::size_t c = 0; c < lat.cols; ++c) {
      if (c + 1 < lat.cols) out.emplace_back(lat.node(r, c), lat.node(r, c + 1));
      if (r + 1 < lat.rows) out.emplace_back(lat.node(r, c), lat.node(r + 1, c));
    }
  }
  return out;
}

std::vector<std::array<Index, 4>> lattice_squares(const LatticeSpec& lat) {
  std::vector<std::array<Index, 4>> out;
  for (std::size_t r = 0; r + 1 < lat.rows; ++r) {
    for (std::size_t c = 0; c + 1 < lat.cols; ++c) {
      out.push_back({lat.node(r, c), lat.node(r, c + 1), lat.node(r + 1, c),
                     lat.node(r + 1, c + 1)});
    }
  }
  return out;
}

std::vector<std::array<Index, 5>> lattice_crosses(const LatticeSpec& lat) {
  std::vector<std::array<Index, 5>> out;
  for (std::size_t r = 1; r + 1 < lat.rows; ++r) {
    for (std::size_t c = 1; c + 1 < lat.cols; ++c) {
      out.push_back({lat.node(r, c), lat.node(r - 1, c), lat.node(r, c + 1), lat.node(r + 1, c),
                     lat.node(r, c - 1)});
    }
  }
  return out;
}

MarkovRandomField build_ising(const LatticeSpec& lat, double theta) {
  auto m = make_field(lat, ModelFamily::ising, {theta});
  connect_within(m, 1, true);
  // I(x_i = x_j) = 1 - x_i - x_j + 2 x_i x_j
  for (auto [a, b] : lattice_edges(lat)) {
    m.energy.add({}, theta);
    m.energy.add({a}, -theta);
    m.energy.add({b}, -theta);
    m.energy.add({a, b}, 2.0 * theta);
  }
  m.energy.prune();
  return m;
}

MarkovRandomField build_independence(const LatticeSpec& lat, double theta) {
  auto m = make_field(lat, ModelFamily::independence, {theta});
  for (Index k = 0; k < lat.size(); ++k) m.energy.add({k}, theta);
  m.energy.prune();
  return m;
}

MarkovRandomField build_autologistic(const LatticeSpec& lat, double theta0, double theta1) {
  auto m = make_field(lat, ModelFamily::autologistic, {theta0, theta1});
  connect_within(m, 1, true);
  // I(x_i != x_j) = x_i + x_j - 2 x_i x_j
  for (auto [a, b] : lattice_edges(lat)) {
    m.energy.add({a}, theta0);
    m.energy.add({b}, theta0);
    m.energy.add({a, b}, theta1 - 2.0 * theta0);
  }
  m.energy.prune();
  return m;
}

MarkovRandomField build_higher_order(const LatticeSpec& lat, const std::array<double, 10>& pot) {
  auto m = make_field(lat, ModelFamily::higher_order, {pot.begin(), pot.end()});
  connect_within(m, 2, true);
  std::vector<double> square(16);
  for (unsigned code = 0; code < 16; ++code) square[code] = pot[square_class(code)];
  std::vector<double> cross(32);
  for (unsigned code = 0; code < 32; ++code) cross[code] = pot[4 + cross_class(code)];
  for (const auto& q : lattice_squares(lat)) add_clique_potential(m.energy, q, square);
  for (const auto& c : lattice_crosses(lat)) add_clique_potential(m.energy, c, cross);
  m.energy.prune();
  return m;
}

MarkovRandomField build_2x2_rotinv(const LatticeSpec& lat, const std::array<double, 5>& theta) {
  auto m = make_field(lat, ModelFamily::rotinv2x2, {theta.begin(), theta.end()});
  connect_within(m, 1, false);
  std::vector<double> square(16);
  for (unsigned code = 0; code < 16; ++code) {
    const int cls = rotation_class(code);
    square[code] = cls == 0 ? 0.0 : theta[static_cast<std::size_t>(cls - 1)];
  }
  for (const auto& q : lattice_squares(lat)) add_clique_potential(m.energy, q, square);
  m.energy.prune();
  return m;
}

MarkovRandomField build_model(ModelFamily family, const LatticeSpec& lat,
                              const std::vector<double>& params) {
  if (params.size() != family_arity(family)) {
    throw InvalidArgument("model family " + std::string(family_name(family)) + " takes " +
                          std::to_string(family_arity(family)) + " parameters, got " +
                          std::to_string(params.size()));
  }
  switch (family) {
    case ModelFamily::ising: return build_ising(lat, params[0]);
    case ModelFamily::independence: return build_independence(lat, params[0]);
    case ModelFamily::autologistic: return build_autologistic(lat, params[0], params[1]);
    case ModelFamily::higher_order: {
      std::array<double, 10> pot{};
      std::copy(params.begin(), params.end(), pot.begin());
      return build_higher_order(lat, pot);
    }
    case ModelFamily::rotinv2x2: {
      std::array<double, 5> theta{};
      std::copy(params.begin(), params.end(), theta.begin());
      return build_2x2_rotinv(lat, theta);
    }
  }
  throw InvalidArgument("unknown model family");
}

MarkovRandomField build_model(const ModelConfig& cfg) {
  return build_model(cfg.family, cfg.lattice, cfg.params);
}

ModelConfig model_config_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("model config: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.family = parse_family(doc.at("family").get<std::string>());
    const auto rows = doc.at("rows").get<long long>();
    const auto cols = doc.at("cols").get<long long>();
    if (rows < 1 || cols < 1) throw InvalidArgument("model config: rows and cols must be >= 1");
    cfg.lattice = {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
    cfg.params = doc.at("params").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("model config: ") + e.what());
  }
  if (cfg.params.size() != family_arity(cfg.family)) {
    throw InvalidArgument("model config: family " + std::string(family_name(cfg.family)) +
                          " takes " + std::to_string(family_arity(cfg.family)) + " parameters");
  }
  return cfg;
}

}  // namespace pbmrf
