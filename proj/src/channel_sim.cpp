#include "advmimo/channel_sim.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <thread>

#include "advmimo/errors.hpp"
#include "advmimo/random.hpp"

namespace advmimo {

namespace {

constexpr double kGeomTol = 1e-9;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Segment a->b against the open interior of the box, shrunk by kGeomTol so a
// path touching a face (reflection points, grazing rays) is not blocked.
bool segment_hits_box(Vec3 a, Vec3 b, const Building& box) {
    const double lo[3] = {box.x_min + kGeomTol, box.y_min + kGeomTol, kGeomTol};
    const double hi[3] = {box.x_max - kGeomTol, box.y_max - kGeomTol, box.height - kGeomTol};
    double t0 = 0.0;
    double t1 = 1.0;
    const Vec3 d = b - a;
    for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(d[axis]) < 1e-15) {
            if (a[axis] <= lo[axis] || a[axis] >= hi[axis]) return false;
            continue;
        }
        double ta = (lo[axis] - a[axis]) / d[axis];
        double tb = (hi[axis] - a[axis]) / d[axis];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 >= t1) return false;
    }
    return true;
}

template <typename T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

Vec3 vec3_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a [x, y, z] array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::pair<double, double> pair_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(std::string(what) + ": expected a 2-element array");
    return {j[0].get<double>(), j[1].get<double>()};
}

void place_random_buildings(ScenarioConfig& config, const nlohmann::json& spec) {
    const int count = json_get(spec, "count", 0);
    if (count < 0) throw ConfigError("random_buildings.count must be >= 0");
    if (!spec.contains("region")) throw ConfigError("random_buildings.region is required");
    const auto& region = spec.at("region");
    if (!region.is_array() || region.size() != 2) throw ConfigError("random_buildings.region: expected [[x0, y0], [x1, y1]]");
    const auto [x0, y0] = pair_from_json(region[0], "random_buildings.region");
    const auto [x1, y1] = pair_from_json(region[1], "random_buildings.region");
    const auto [size_lo, size_hi] = pair_from_json(spec.value("size", nlohmann::json::array({10.0, 30.0})), "random_buildings.size");
    const auto [h_lo, h_hi] = pair_from_json(spec.value("height", nlohmann::json::array({10.0, 40.0})), "random_buildings.height");
    if (!(x1 > x0) || !(y1 > y0) || !(size_hi >= size_lo) || !(size_lo > 0) || !(h_hi >= h_lo) || !(h_lo > 0)) {
        throw ConfigError("random_buildings: invalid region, size, or height range");
    }

    Rng rng(derive_seed(config.seed, "buildings"));
    const auto overlaps = [](const Building& a, const Building& b) {
        return a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max;
    };
    int placed = 0;
    for (int attempt = 0; placed < count; ++attempt) {
        if (attempt > 1000 * (count + 1)) throw ConfigError("random_buildings: could not place all buildings");
        const double w = rng.uniform(size_lo, size_hi);
        const double d = rng.uniform(size_lo, size_hi);
        const double cx = rng.uniform(x0, x1);
        const double cy = rng.uniform(y0, y1);
        const double h = rng.uniform(h_lo, h_hi);
        Building b{cx - w / 2, cy - d / 2, cx + w / 2, cy + d / 2, h};
        // keep a 1 m clearance around the base station
        Building clearance{config.bs_position.x - 1.0, config.bs_position.y - 1.0,
                           config.bs_position.x + 1.0, config.bs_position.y + 1.0, 1.0};
        if (overlaps(b, clearance)) continue;
        if (std::any_of(config.buildings.begin(), config.buildings.end(),
                        [&](const Building& o) { return overlaps(b, o); })) {
            continue;
        }
        config.buildings.push_back(b);
        ++placed;
    }
}

}  // namespace

bool Building::contains(Vec3 p) const {
    return p.x > x_min && p.x < x_max && p.y > y_min && p.y < y_max && p.z >= 0.0 && p.z < height;
}

void ScenarioConfig::validate() const {
    if (!(user_grid.spacing > 0.0)) throw ConfigError("user_grid.spacing must be > 0");
    if (user_grid.nx < 1 || user_grid.ny < 1) throw ConfigError("user_grid.nx and ny must be >= 1");
    if (!(carrier_freq > 0.0)) throw ConfigError("carrier_freq must be > 0");
    if (max_reflections < 0 || max_reflections > 4) throw ConfigError("max_reflections must be in [0, 4]");
    if (!(reflection_loss >= 0.0)) throw ConfigError("reflection_loss must be >= 0 dB");
    if (!(user_height > 0.0) || !(bs_position.z > 0.0)) {
        throw ConfigError("base station and users must be above the ground");
    }
    for (const auto& b : buildings) {
        if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min) || !(b.height > 0.0)) {
            throw ConfigError("building needs max > min and height > 0");
        }
        if (b.contains(bs_position)) throw ConfigError("base station lies inside a building");
    }
}

std::vector<Vec3> ScenarioConfig::user_positions() const {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(user_grid.nx) * static_cast<std::size_t>(user_grid.ny));
    for (int iy = 0; iy < user_grid.ny; ++iy) {
        for (int ix = 0; ix < user_grid.nx; ++ix) {
            out.push_back({user_grid.origin_x + ix * user_grid.spacing,
                           user_grid.origin_y + iy * user_grid.spacing, user_height});
        }
    }
    return out;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    try {
        ScenarioConfig c;
        if (!j.is_object()) throw ConfigError("scene must be a JSON object");
        if (j.contains("bs_position")) c.bs_position = vec3_from_json(j.at("bs_position"));
        if (j.contains("user_grid")) {
            const auto& g = j.at("user_grid");
            if (g.contains("origin")) {
                std::tie(c.user_grid.origin_x, c.user_grid.origin_y) = pair_from_json(g.at("origin"), "user_grid.origin");
            }
            c.user_grid.nx = json_get(g, "nx", c.user_grid.nx);
            c.user_grid.ny = json_get(g, "ny", c.user_grid.ny);
            c.user_grid.spacing = json_get(g, "spacing", c.user_grid.spacing);
        }
        c.user_height = json_get(j, "user_height", c.user_height);
        c.carrier_freq = json_get(j, "carrier_freq", c.carrier_freq);
        c.tx_power = json_get(j, "tx_power", c.tx_power);
        c.max_reflections = json_get(j, "max_reflections", c.max_reflections);
        c.reflection_loss = json_get(j, "reflection_loss", c.reflection_loss);
        c.seed = json_get<std::uint64_t>(j, "seed", c.seed);
        if (j.contains("buildings")) {
            for (const auto& b : j.at("buildings")) {
                const auto [x0, y0] = pair_from_json(b.at("min"), "building.min");
                const auto [x1, y1] = pair_from_json(b.at("max"), "building.max");
                c.buildings.push_back({x0, y0, x1, y1, b.at("height").get<double>()});
            }
        }
        if (j.contains("random_buildings")) place_random_buildings(c, j.at("random_buildings"));
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scene: ") + e.what());
    }
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open scene file: " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scene " + path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

nlohmann::json scenario_to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["bs_position"] = {c.bs_position.x, c.bs_position.y, c.bs_position.z};
    j["user_grid"] = {{"origin", {c.user_grid.origin_x, c.user_grid.origin_y}},
                      {"nx", c.user_grid.nx},
                      {"ny", c.user_grid.ny},
                      {"spacing", c.user_grid.spacing}};
    j["user_height"] = c.user_height;
    j["carrier_freq"] = c.carrier_freq;
    j["tx_power"] = c.tx_power;
    j["max_reflections"] = c.max_reflections;
    j["reflection_loss"] = c.reflection_loss;
    j["seed"] = c.seed;
    j["buildings"] = nlohmann::json::array();
    for (const auto& b : c.buildings) {
        j["buildings"].push_back({{"min", {b.x_min, b.y_min}}, {"max", {b.x_max, b.y_max}}, {"height", b.height}});
    }
    return j;
}

// ---------------------------------------------------------------------------

Angles direction_angles(Vec3 d) {
    const double r = d.norm();
    if (r == 0.0) return {};
    double phi = std::atan2(d.y, d.x) * kRadToDeg;
    if (phi <= -180.0) phi += 360.0;
    if (d.x == 0.0 && d.y == 0.0) phi = 0.0;
    const double theta = std::acos(std::clamp(d.z / r, -1.0, 1.0)) * kRadToDeg;
    return {phi, theta};
}

double free_space_pathloss(double distance_m, double freq_hz) {
    if (!(distance_m > 0.0) || !(freq_hz > 0.0)) {
        throw std::domain_error("free_space_pathloss: distance and frequency must be positive");
    }
    return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * freq_hz / kSpeedOfLight);
}

double path_loss(const ScenarioConfig& config, const PropagationPath& path) {
    return free_space_pathloss(path.length, config.carrier_freq) + path.bounces * config.reflection_loss;
}

// ---------------------------------------------------------------------------

ImageTree::ImageTree(const ScenarioConfig& config) : config_(&config) {
    surfaces_.push_back({2, 0.0, 1.0, -1});
    for (std::size_t b = 0; b < config.buildings.size(); ++b) {
        const auto& box = config.buildings[b];
        const int id = static_cast<int>(b);
        surfaces_.push_back({0, box.x_min, -1.0, id});
        surfaces_.push_back({0, box.x_max, 1.0, id});
        surfaces_.push_back({1, box.y_min, -1.0, id});
        surfaces_.push_back({1, box.y_max, 1.0, id});
    }

    nodes_.push_back({config.bs_position, -1, -1, 0});
    // breadth-first, so nodes_ is ordered by depth
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node parent = nodes_[i];
        if (parent.depth >= config.max_reflections) continue;
        for (std::size_t s = 0; s < surfaces_.size(); ++s) {
            if (static_cast<int>(s) == parent.surface) continue;
            const auto& surf = surfaces_[s];
            // a specular reflection needs the (virtual) source on the reflecting side
            if (!in_front(parent.image, surf)) continue;
            Vec3 image = parent.image;
            image[surf.axis] = 2.0 * surf.offset - image[surf.axis];
            nodes_.push_back({image, static_cast<int>(s), static_cast<int>(i), parent.depth + 1});
        }
    }
}

bool ImageTree::in_front(Vec3 p, const Surface& s) const {
    return s.side * (p[s.axis] - s.offset) > kGeomTol;
}

bool ImageTree::on_face(Vec3 q, const Surface& s) const {
    if (s.building < 0) return true;
    const auto& box = config_->buildings[static_cast<std::size_t>(s.building)];
    if (q.z < -kGeomTol || q.z > box.height + kGeomTol) return false;
    if (s.axis == 0) return q.y >= box.y_min - kGeomTol && q.y <= box.y_max + kGeomTol;
    return q.x >= box.x_min - kGeomTol && q.x <= box.x_max + kGeomTol;
}

bool ImageTree::segment_clear(Vec3 a, Vec3 b) const {
    for (const auto& box : config_->buildings) {
        if (segment_hits_box(a, b, box)) return false;
    }
    return true;
}

std::optional<PropagationPath> ImageTree::los_path(Vec3 user) const {
    const Vec3 bs = config_->bs_position;
    if (!segment_clear(bs, user)) return std::nullopt;
    PropagationPath p;
    p.length = (user - bs).norm();
    p.bounces = 0;
    p.is_los = true;
    p.departure = direction_angles(user - bs);
    p.arrival = direction_angles(bs - user);
    p.vertices = {bs, user};
    return p;
}

std::optional<PropagationPath> ImageTree::realize(std::size_t node, Vec3 user) const {
    const Node& leaf = nodes_[node];
    std::vector<Vec3> reversed{user};
    Vec3 target = user;
    for (int n = static_cast<int>(node); n != 0; n = nodes_[static_cast<std::size_t>(n)].parent) {
        const Node& cur = nodes_[static_cast<std::size_t>(n)];
        const Surface& s = surfaces_[static_cast<std::size_t>(cur.surface)];
        if (!in_front(target, s)) return std::nullopt;
        const double denom = cur.image[s.axis] - target[s.axis];
        const double t = (s.offset - target[s.axis]) / denom;
        if (!(t > 1e-12 && t < 1.0 - 1e-12)) return std::nullopt;
        Vec3 q = target + t * (cur.image - target);
        q[s.axis] = s.offset;
        if (!on_face(q, s)) return std::nullopt;
        reversed.push_back(q);
        target = q;
    }
    reversed.push_back(config_->bs_position);

    std::vector<Vec3> vertices(reversed.rbegin(), reversed.rend());
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        if (!segment_clear(vertices[i], vertices[i + 1])) return std::nullopt;
    }
    PropagationPath p;
    p.length = (leaf.image - user).norm();
    p.bounces = leaf.depth;
    p.is_los = false;
    p.departure = direction_angles(vertices[1] - vertices[0]);
    p.arrival = direction_angles(vertices[vertices.size() - 2] - vertices.back());
    p.vertices = std::move(vertices);
    return p;
}

std::vector<PropagationPath> ImageTree::trace(Vec3 user) const {
    std::vector<PropagationPath> out;
    if (auto los = los_path(user)) out.push_back(std::move(*los));
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (auto p = realize(i, user)) out.push_back(std::move(*p));
    }
    return out;
}

std::optional<PropagationPath> ImageTree::strongest(Vec3 user) const {
    // reflected paths are never shorter than the direct one and each bounce costs >= 0 dB
    if (auto los = los_path(user)) return los;

    // Ranking by length * 10^(bounces * loss / 20) is the same as ranking by
    // total pathloss, without a log per candidate.
    std::array<double, 5> scale{};
    for (int d = 0; d < 5; ++d) scale[static_cast<std::size_t>(d)] = std::pow(10.0, d * config_->reflection_loss / 20.0);

    using Candidate = std::pair<double, std::size_t>;
    std::vector<Candidate> heap;
    heap.reserve(nodes_.size());
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (!in_front(user, surfaces_[static_cast<std::size_t>(n.surface)])) continue;
        heap.emplace_back((n.image - user).norm() * scale[static_cast<std::size_t>(n.depth)], i);
    }
    const auto worse = [](const Candidate& a, const Candidate& b) { return a > b; };
    std::make_heap(heap.begin(), heap.end(), worse);
    while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        const auto node = heap.back().second;
        heap.pop_back();
        if (auto p = realize(node, user)) return p;
    }
    return std::nullopt;
}

std::vector<PropagationPath> trace_paths(const ScenarioConfig& config, Vec3 user) {
    return ImageTree(config).trace(user);
}

Record record_from_path(const ScenarioConfig& config, Vec3 user, const PropagationPath& path) {
    const Vec3 bs = config.bs_position;
    Record r;
    r.x_coord = user.x;
    r.y_coord = user.y;
    r.distance = (user - bs).norm();
    r.pathloss = path_loss(config, path);
    // LoS paths are measured exactly as the straight-line distance
    const double length = path.is_los ? r.distance : path.length;
    r.time_of_arrival = length / kSpeedOfLight;
    double phase = std::fmod(-360.0 * config.carrier_freq * length / kSpeedOfLight, 360.0);
    if (phase < 0.0) phase += 360.0;
    if (phase >= 360.0) phase -= 360.0;
    r.phase = phase;
    r.power = std::pow(10.0, (config.tx_power - r.pathloss - 30.0) / 10.0);
    r.doa_phi = path.arrival.phi;
    r.doa_theta = path.arrival.theta;
    r.dod_phi = path.departure.phi;
    r.dod_theta = path.departure.theta;
    r.los = path.is_los ? 1 : 0;
    return r;
}

std::optional<Record> path_to_record(const ScenarioConfig& config, Vec3 user,
                                     const std::vector<PropagationPath>& paths) {
    if (paths.empty()) return std::nullopt;
    std::size_t best = 0;
    double best_loss = path_loss(config, paths[0]);
    for (std::size_t i = 1; i < paths.size(); ++i) {
        const double loss = path_loss(config, paths[i]);
        if (loss < best_loss) {
            best_loss = loss;
            best = i;
        }
    }
    return record_from_path(config, user, paths[best]);
}

GeneratedScenario generate_scenario(const ScenarioConfig& config, unsigned threads) {
    config.validate();
    const ImageTree tree(config);
    const auto users = config.user_positions();

    enum class Outcome : unsigned char { record, blocked, inside };
    std::vector<Record> slots(users.size());
    std::vector<Outcome> outcome(users.size(), Outcome::blocked);

    const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Vec3 u = users[i];
            if (std::any_of(config.buildings.begin(), config.buildings.end(),
                            [&](const Building& b) { return b.contains(u); })) {
                outcome[i] = Outcome::inside;
                continue;
            }
            if (auto path = tree.strongest(u)) {
                slots[i] = record_from_path(config, u, *path);
                outcome[i] = Outcome::record;
            }
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, users.size() / 64)));
    if (threads <= 1) {
        work(0, users.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (users.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = std::min(users.size(), t * chunk);
            const std::size_t e = std::min(users.size(), b + chunk);
            pool.emplace_back(work, b, e);
        }
    }

    std::vector<Record> records;
    std::size_t blocked = 0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        switch (outcome[i]) {
            case Outcome::record: records.push_back(slots[i]); break;
            case Outcome::blocked: ++blocked; break;
            case Outcome::inside: ++inside; break;
        }
    }
    if (records.empty()) {
        throw DataError("scenario produced no reachable users (" + std::to_string(blocked) + " blocked, " +
                        std::to_string(inside) + " inside buildings)");
    }
    return {RecordSet(std::move(records), Provenance::generated), blocked, inside};
}

}  // namespace advmimo
