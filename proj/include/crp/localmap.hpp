#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crp/geometry.hpp"

namespace crp {

class MapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Classification of a free-space boundary edge.
enum class EdgeClass { observed_boundary, frontier, window_arc };

enum class EndpointKind { obstacle, window, free };

/// Frontier polyline. Occlusion frontiers separate the visible region from
/// the shadow cast by an obstacle; window arcs are the directly visible
/// parts of the window rim.
struct Frontier {
    std::vector<Vec2> polyline;
    double length = 0.0;
    EndpointKind start_kind = EndpointKind::free;
    EndpointKind end_kind = EndpointKind::free;
    bool window_arc = false;
};

/// Maximal chain of free-space boundary edges lying on one obstacle. Points
/// are in the counter-clockwise order of the free-space polygon, so the
/// obstacle is on the right-hand side.
struct BoundaryChain {
    std::vector<Vec2> polyline;
    std::size_t obstacle = 0;
};

enum class JunctionKind {
    silhouette,  // chain ends at an obstacle corner that casts a shadow
    occluded,    // chain disappears behind another obstacle's shadow
    window_rim,  // chain leaves the sensing window
};

struct PredictedBoundary {
    Vec2 anchor;
    Vec2 tangent;  // unit, pointing away from the observed chain
    std::size_t chain = 0;
    bool at_chain_end = true;
    JunctionKind kind = JunctionKind::silhouette;
};

struct LocalMap {
    Vec2 robot;
    double window_size = 0.0;
    Polygon window;
    Polygon free_space;
    std::vector<Polygon> obstacles;     // sensed scene, restricted to the window
    std::vector<EdgeClass> edge_class;  // one per free_space edge
    std::vector<Frontier> frontiers;    // occlusion frontiers
    std::vector<Frontier> window_arcs;  // visible rim, one per window side
    std::vector<BoundaryChain> observed_boundaries;
    std::vector<PredictedBoundary> predicted_boundaries;
};

inline constexpr double kDefaultWindowSize = 2.0;

/// Builds the sliding local map around robot_pos from the sensed scene.
/// Throws MapError if the visibility polygon is degenerate.
LocalMap build_local_map(Vec2 robot_pos, double window_size, std::span<const Polygon> scene);

/// Predicted continuation of each partially observed obstacle boundary.
///
/// At a silhouette corner the hidden side is assumed to turn by a right
/// angle into the shadow (clamped to the shadow cone for non-rectangular
/// shapes). Where a chain leaves the window or vanishes into another
/// obstacle's shadow the boundary is continued straight.
std::vector<PredictedBoundary> extract_predicted_boundaries(const LocalMap& map);

/// Angular width of the contiguous opening around candidate_pos that
/// contains the outward direction from the robot, considering observed
/// obstacle boundaries closer than `reach`. Returns 2*pi when nothing is in
/// reach.
double narrow_region_angle(Vec2 candidate_pos, const LocalMap& map, double reach);

bool goal_in_free_space(const LocalMap& map, Vec2 goal);

/// Polyline of an observed obstacle boundary extended by its predicted
/// boundaries (each extension `extension` meters long).
std::vector<Vec2> extended_boundary(const LocalMap& map, std::size_t chain, double extension);

/// Structured text dump (JSON) of the map for plotting and debugging.
std::string dump_local_map(const LocalMap& map);

const char* to_string(EdgeClass c);
const char* to_string(JunctionKind k);

}  // namespace crp
