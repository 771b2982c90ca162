#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "advmimo/dataset.hpp"

namespace advmimo {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Axis-aligned building: footprint [x_min, x_max] x [y_min, y_max], from the
/// ground up to `height`.
struct Building {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    double height = 0.0;

    // Strictly inside the volume (faces count as outside).
    bool contains(Vec3 p) const;
};

struct UserGrid {
    double origin_x = 0.0;
    double origin_y = 0.0;
    int nx = 1;
    int ny = 1;
    double spacing = 0.37;
};

struct ScenarioConfig {
    Vec3 bs_position{0.0, 0.0, 15.0};
    UserGrid user_grid;
    double user_height = 2.0;
    double carrier_freq = 2.8e10;
    double tx_power = 0.0;        // dBm
    std::vector<Building> buildings;
    int max_reflections = 4;
    double reflection_loss = 6.0;  // dB per bounce
    std::uint64_t seed = 0;

    // Throws ConfigError.
    void validate() const;

    // Grid user positions in row-major order (y outer, x inner).
    std::vector<Vec3> user_positions() const;
};

/// Scene JSON. Buildings come from an explicit "buildings" list and/or a
/// seeded "random_buildings" block:
///
///   { "bs_position": [0, 0, 15],
///     "user_grid": {"origin": [x, y], "nx": 50, "ny": 50, "spacing": 0.37},
///     "user_height": 2, "carrier_freq": 2.8e10, "tx_power": 0,
///     "max_reflections": 4, "reflection_loss": 6, "seed": 7,
///     "buildings": [{"min": [x, y], "max": [x, y], "height": h}],
///     "random_buildings": {"count": 5, "region": [[x0, y0], [x1, y1]],
///                          "size": [lo, hi], "height": [lo, hi]} }
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const ScenarioConfig& config);

struct Angles {
    double phi = 0.0;    // azimuth from +X, degrees, (-180, 180]
    double theta = 0.0;  // from zenith, degrees, [0, 180]
};

// Direction angles of the vector `d`.
Angles direction_angles(Vec3 d);

struct PropagationPath {
    double length = 0.0;
    int bounces = 0;
    Angles arrival;    // at the user, pointing back along the incoming ray
    Angles departure;  // at the base station
    bool is_los = false;
    std::vector<Vec3> vertices;  // BS, reflection points..., user
};

// Free-space pathloss 20*log10(4*pi*d*f/c) in dB. Throws std::domain_error.
double free_space_pathloss(double distance_m, double freq_hz);

// Pathloss of a path: free-space loss over its length plus a fixed loss per bounce.
double path_loss(const ScenarioConfig& config, const PropagationPath& path);

/// Mirror images of the base station across the ground and building walls,
/// up to `max_reflections` deep. Building it once per scene amortizes the
/// image method over every user.
class ImageTree {
public:
    explicit ImageTree(const ScenarioConfig& config);

    // Every LoS and specular reflected path reaching `user`.
    std::vector<PropagationPath> trace(Vec3 user) const;

    // Lowest-loss path, or nullopt under total blockage. Same choice as
    // taking the minimum over trace(), without enumerating everything.
    std::optional<PropagationPath> strongest(Vec3 user) const;

    std::size_t image_count() const { return nodes_.size(); }

private:
    struct Surface {
        int axis = 2;          // plane normal axis
        double offset = 0.0;   // plane coordinate
        double side = 1.0;     // +1: reflecting side has coordinate > offset
        int building = -1;     // -1 for the ground
    };
    struct Node {
        Vec3 image;
        int surface = -1;
        int parent = -1;
        int depth = 0;
    };

    bool in_front(Vec3 p, const Surface& s) const;
    bool on_face(Vec3 q, const Surface& s) const;
    bool segment_clear(Vec3 a, Vec3 b) const;
    std::optional<PropagationPath> los_path(Vec3 user) const;
    std::optional<PropagationPath> realize(std::size_t node, Vec3 user) const;

    const ScenarioConfig* config_;
    std::vector<Surface> surfaces_;
    std::vector<Node> nodes_;  // nodes_[0] is the base station itself
};

std::vector<PropagationPath> trace_paths(const ScenarioConfig& config, Vec3 user);

// Strongest path's features, or nullopt when `paths` is empty (total blockage).
std::optional<Record> path_to_record(const ScenarioConfig& config, Vec3 user,
                                     const std::vector<PropagationPath>& paths);
Record record_from_path(const ScenarioConfig& config, Vec3 user, const PropagationPath& path);

struct GeneratedScenario {
    RecordSet records;
    std::size_t blocked_users = 0;          // no path at all (excluded)
    std::size_t users_inside_buildings = 0;  // grid points inside a building volume (skipped)
};

// One record per reachable grid user, in grid order. `threads` = 0 picks the
// hardware concurrency; output does not depend on it. Throws DataError if no
// user is reachable.
GeneratedScenario generate_scenario(const ScenarioConfig& config, unsigned threads = 0);

}  // namespace advmimo
