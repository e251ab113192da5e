#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hydra/geometry.hpp"
#include "hydra/rng.hpp"

namespace hydra::sim {

enum class AgentKind { Ego, Homogeneous, HetLatent, HetArch };

const char* kind_name(AgentKind k);

/// Per-agent single-detector surrogate.
struct DetectModel {
    double recall_prob = 0.85;
    double pos_sigma = 0.15;   // meters, on x and y
    double yaw_sigma = 0.02;   // radians
    double conf_mean = 0.80;
    double conf_spread = 0.10;
    double fp_rate = 1.5;      // expected false positives per frame
    double fov_range = 70.0;   // meters
    // Systematic range miscalibration: local detection positions are
    // scaled by this factor (coarse voxelization, sensor calibration).
    // 1.0 = perfectly calibrated.
    double range_scale = 1.0;
};

/// How the ego's frozen decoder renders an agent's transmitted
/// features. Faithful decodes apply small jitter to the transmitted
/// boxes; Degraded decodes model a domain-shifted feature stream.
struct DecodeModel {
    enum class Mode { Faithful, Degraded };
    Mode mode = Mode::Faithful;
    // Faithful
    double jitter_sigma = 0.12;  // meters on center, radians on yaw
    double conf_jitter = 0.05;
    // Degraded
    double drop_prob = 0.4;
    double offset_sigma = 3.0;        // meters
    double conf_noise = 1.0;          // 0 = keep confidences, 1 = fully random
    double hallucination_rate = 2.0;  // expected phantom boxes per frame
};

struct AgentSpec {
    std::string agent_id;
    AgentKind kind = AgentKind::Homogeneous;
    DetectModel detect;
    DecodeModel decode;
};

struct ScenarioConfig {
    std::uint64_t seed = 42;
    int n_frames = 50;
    double map_extent_x = 140.8;          // half-extent along x
    double map_extent_y = 40.0;           // half-extent along y
    std::array<int, 3> object_counts{14, 8, 4};  // vehicle, pedestrian, truck
    std::vector<AgentSpec> agents;
    double pose_noise_sigma = 0.0;        // meters, Gaussian on x and y
    double heading_noise_sigma_deg = 0.0; // degrees
};

struct Scene {
    std::vector<geometry::Detection> objects;  // ground truth, global frame
    std::vector<geometry::Pose2> agent_poses;  // true poses, parallel to cfg.agents
};

// Ground-truth box templates per class: length, width, height.
inline constexpr std::array<std::array<double, 3>, 3> kClassSizes{
    {{4.6, 1.9, 1.6}, {0.6, 0.6, 1.7}, {8.0, 2.5, 3.2}}};

/// Deterministic scene synthesis from (cfg.seed, frame). Objects spawn
/// pairwise non-overlapping in BEV (circumradius separation); agent
/// poses fall inside the map extent.
Scene generate_scene(const ScenarioConfig& cfg, int frame);

/// Single-agent detector surrogate: every truth object within fov_range
/// is detected with recall_prob, perturbed by pos/yaw sigma, plus
/// Poisson(fp_rate) false positives. Output is agent-local through the
/// TRUE pose, with box provenance set to the agent index.
geometry::DetectionSet sense(const ScenarioConfig& cfg, int agent_index, const Scene& scene,
                             int frame);

/// B_pred surrogate for the given agent's transmitted features.
geometry::DetectionSet decode_surrogate(const ScenarioConfig& cfg, int agent_index,
                                        const geometry::DetectionSet& transmitted, int frame);

/// Degraded-decode severity in [0, 1]; 0 for Faithful decodes. Drives
/// the stage-1 contamination model when heterogeneous features are
/// blindly fused.
double decode_severity(const DecodeModel& m);

/// Simulated feature-fusion detector over {ego} + the listed intermediate agents
/// (indices into cfg.agents). Coverage is the union of member fovs with
/// per-member recall, position noise shrinks by 1/sqrt(1 + n_int), and
/// confidences are drawn high. True poses are used throughout: feature
/// fusion is modeled as tolerant of minor misalignment. Members with
/// Degraded decodes contaminate the result (reduced recall, inflated
/// noise, extra confident false positives).
geometry::DetectionSet stage1_oracle(const ScenarioConfig& cfg,
                                     const std::vector<int>& intermediate_indices,
                                     const Scene& scene, int frame);

/// Gaussian noise on the transmitted pose. Standard normals are always
/// drawn and scaled, so sigma = 0 reproduces the input bit-exactly with
/// identical stream consumption.
geometry::Pose2 inject_pose_noise(const geometry::Pose2& true_pose, double sigma_pos_m,
                                  double sigma_head_deg, rng::Stream& stream);

// Stream purposes; every stochastic draw is keyed by
// (seed, frame, purpose, scope...) so noise sources never interact.
namespace streams {
inline constexpr std::uint64_t kScene = 1;
inline constexpr std::uint64_t kSense = 2;
inline constexpr std::uint64_t kDecode = 3;
inline constexpr std::uint64_t kPoseNoise = 4;
inline constexpr std::uint64_t kStage1Recall = 5;
inline constexpr std::uint64_t kStage1Noise = 6;
inline constexpr std::uint64_t kStage1Fp = 7;
inline constexpr std::uint64_t kStage1Contam = 8;
inline constexpr std::uint64_t kStage1Synergy = 9;

inline rng::Stream make(const ScenarioConfig& cfg, int frame, std::uint64_t purpose,
                        std::uint64_t scope = 0) {
    return rng::Stream(rng::mix_seed({cfg.seed, static_cast<std::uint64_t>(frame), purpose, scope}));
}
}  // namespace streams

}  // namespace hydra::sim
