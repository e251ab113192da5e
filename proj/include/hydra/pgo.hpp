#pragma once

#include <map>
#include <string>
#include <vector>

#include "hydra/geometry.hpp"

namespace hydra::pgo {

/// A stage-1 detection reduced to its SE(2) pose. Anchors stay fixed
/// during anchor-guided optimization.
struct AnchorNode {
    geometry::Pose2 pose;
    double confidence = 0.0;
    int class_id = 0;
};

/// Constraint between one variable agent pose and one anchor. The
/// observation is the agent's untransformed local detection pose; the
/// weight is c_aux^gamma * c_anchor^beta (scalar information).
struct PoseEdge {
    int agent_index = 0;
    int anchor_index = 0;
    geometry::Pose2 observation;
    double c_aux = 0.0;
    double weight = 0.0;
};

struct PgoConfig {
    double gate_dist = 3.0;      // meters
    double gate_yaw = 0.5236;    // radians (~30 deg)
    double gamma = 1.0;          // exponent on the agent detection confidence
    double beta = 1.0;           // exponent on the anchor confidence
    int max_iters = 50;          // total inner iterations across outer rounds
    double grad_tol = 1e-8;
    double damping_init = 1e-4;
    int outer_rounds = 3;        // re-association rounds
    // An agent needs at least this many edges before its correction is
    // applied (3-DOF pose plus one redundant correspondence);
    // under-constrained solves take the box-heading noise and amplify it
    // through the lever arm. Gated agents pass through.
    int min_edges = 4;
};

struct PgoResult {
    std::map<std::string, geometry::Pose2> corrected;
    int iterations_used = 0;  // max over agents (subproblems are independent)
    double final_cost = 0.0;
    std::map<std::string, int> edges_per_agent;
};

/// One agent entering the late branch: its current pose estimate and its
/// agent-local detections.
struct LateAgent {
    std::string agent_id;
    geometry::Pose2 pose_estimate;
    geometry::DetectionSet detections;  // agent-local
};

struct Graph {
    std::vector<AnchorNode> anchors;
    std::vector<PoseEdge> edges;
};

/// h(x_i, o_k): the global anchor expressed in agent i's frame,
/// compose(inverse(x_i), o_k).
geometry::Pose2 predict_observation(const geometry::Pose2& x_i, const geometry::Pose2& o_k);

/// Anchor extraction plus gated association. Each agent's detections are
/// projected into the global frame with its current pose estimate and
/// matched to anchors by Hungarian on center distance; pairs beyond
/// gate_dist / gate_yaw or with a class mismatch are infeasible. Agents
/// with no feasible match simply contribute no edges.
Graph build_graph(const geometry::DetectionSet& stage1, const std::vector<LateAgent>& late_agents,
                  const PgoConfig& cfg);

/// Confidence-weighted nonlinear least squares over the agent poses,
/// anchors held fixed. Because no edge couples two variable nodes the
/// problem decouples agent by agent; each subproblem runs
/// Levenberg-Marquardt with an analytic 3x3 Jacobian. Accepted steps
/// never increase the cost. Agents whose normal equations carry no
/// information (no edges, all-zero weights) pass through unchanged.
PgoResult optimize(const std::vector<AnchorNode>& anchors, const std::vector<PoseEdge>& edges,
                   const std::vector<LateAgent>& agents, const PgoConfig& cfg);

/// Same problem solved as one joint system (anchors still fixed). Exists
/// to demonstrate the agent-wise decoupling; results match optimize() at
/// solver tolerance.
PgoResult optimize_joint(const std::vector<AnchorNode>& anchors,
                         const std::vector<PoseEdge>& edges,
                         const std::vector<LateAgent>& agents, const PgoConfig& cfg);

/// Full anchor-guided loop: re-associate with the current pose
/// estimates, optimize, repeat (outer_rounds times, re-gating each
/// round). The inner-iteration budget max_iters spans all rounds.
PgoResult run_agpgo(const geometry::DetectionSet& stage1, const std::vector<LateAgent>& late_agents,
                    const PgoConfig& cfg);

struct AllVariableResult {
    PgoResult agents;
    std::vector<AnchorNode> anchors;  // object nodes after joint optimization
};

/// Ablation plumbing: objects become variable nodes pinned only by edges
/// from the fixed ego pose, and agents couple to them, so agent
/// localization error can drag the anchor set. Returns the moved anchors
/// alongside the corrected agent poses.
AllVariableResult run_all_variable(const geometry::DetectionSet& stage1,
                                   const geometry::Pose2& ego_pose,
                                   const std::vector<LateAgent>& late_agents,
                                   const PgoConfig& cfg);

}  // namespace hydra::pgo
