#include "hydra/pgo.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hydra/assignment.hpp"

namespace hydra::pgo {

using geometry::Pose2;
using geometry::PoseDelta;
using geometry::wrap_angle;

geometry::Pose2 predict_observation(const Pose2& x_i, const Pose2& o_k) {
    return geometry::compose(geometry::inverse(x_i), o_k);
}

namespace {

constexpr double kInfeasible = 1e12;

std::vector<AnchorNode> extract_anchors(const geometry::DetectionSet& stage1) {
    if (stage1.frame != geometry::Frame::EgoGlobal) {
        throw std::invalid_argument("pgo: stage-1 detections must be ego-global");
    }
    std::vector<AnchorNode> anchors;
    anchors.reserve(stage1.items.size());
    for (const geometry::Detection& d : stage1.items) {
        anchors.push_back({Pose2(d.x, d.y, d.yaw), d.confidence, d.class_id});
    }
    return anchors;
}

// Gated Hungarian pairing (det index, anchor index) of one agent's
// detections projected through its current pose estimate.
std::vector<std::pair<int, int>> gated_pairs(const std::vector<AnchorNode>& anchors,
                                             const LateAgent& agent, const PgoConfig& cfg) {
    const auto& dets = agent.detections.items;
    if (dets.empty() || anchors.empty()) return {};

    std::vector<std::vector<double>> cost(dets.size(),
                                          std::vector<double>(anchors.size(), kInfeasible));
    for (std::size_t d = 0; d < dets.size(); ++d) {
        const Pose2 local(dets[d].x, dets[d].y, dets[d].yaw);
        const Pose2 projected = geometry::compose(agent.pose_estimate, local);
        for (std::size_t k = 0; k < anchors.size(); ++k) {
            if (dets[d].class_id != anchors[k].class_id) continue;
            const double dx = projected.x - anchors[k].pose.x;
            const double dy = projected.y - anchors[k].pose.y;
            const double dist = std::hypot(dx, dy);
            if (dist > cfg.gate_dist) continue;
            if (std::abs(wrap_angle(projected.yaw - anchors[k].pose.yaw)) > cfg.gate_yaw)
                continue;
            cost[d][k] = dist;
        }
    }
    std::vector<std::pair<int, int>> pairs;
    for (const auto& [d, k] : assignment::hungarian(cost, /*maximize=*/false)) {
        if (cost[d][k] >= 0.5 * kInfeasible) continue;
        pairs.emplace_back(d, k);
    }
    return pairs;
}

PoseEdge make_edge(int agent_index, int anchor_index, const geometry::Detection& det,
                   double anchor_conf, const PgoConfig& cfg) {
    PoseEdge e;
    e.agent_index = agent_index;
    e.anchor_index = anchor_index;
    e.observation = Pose2(det.x, det.y, det.yaw);
    e.c_aux = det.confidence;
    e.weight = std::pow(std::max(0.0, e.c_aux), cfg.gamma) *
               std::pow(std::max(0.0, anchor_conf), cfg.beta);
    return e;
}

// Gated Hungarian association of every agent's detections to the anchors.
std::vector<PoseEdge> associate(const std::vector<AnchorNode>& anchors,
                                const std::vector<LateAgent>& agents, const PgoConfig& cfg) {
    std::vector<PoseEdge> edges;
    for (int ai = 0; ai < static_cast<int>(agents.size()); ++ai) {
        for (const auto& [d, k] : gated_pairs(anchors, agents[ai], cfg)) {
            edges.push_back(make_edge(ai, k, agents[ai].detections.items[static_cast<std::size_t>(d)],
                                      anchors[static_cast<std::size_t>(k)].confidence, cfg));
        }
    }
    return edges;
}

// Residual r = z (-) h(x, o) and its Jacobians w.r.t. the observer pose
// x and the target pose o. With theta = x.yaw, c = cos(theta),
// s = sin(theta):
//   h.x =  c*(o.x - x.x) + s*(o.y - x.y)
//   h.y = -s*(o.x - x.x) + c*(o.y - x.y)
//   h.yaw = o.yaw - theta
//   dr/dx = [[ c,  s, -h.y], [-s,  c,  h.x], [0, 0, 1]]
//   dr/do = [[-c, -s,  0  ], [ s, -c,  0  ], [0, 0, -1]]
struct ResidualEval {
    Eigen::Vector3d r;
    Eigen::Matrix3d j_obs;
    Eigen::Matrix3d j_target;
};

ResidualEval eval_edge(const Pose2& x, const Pose2& o, const Pose2& z) {
    const double c = std::cos(x.yaw);
    const double s = std::sin(x.yaw);
    const double hx = c * (o.x - x.x) + s * (o.y - x.y);
    const double hy = -s * (o.x - x.x) + c * (o.y - x.y);
    const double hyaw = wrap_angle(o.yaw - x.yaw);

    ResidualEval out;
    out.r << z.x - hx, z.y - hy, wrap_angle(z.yaw - hyaw);
    out.j_obs << c, s, -hy, -s, c, hx, 0.0, 0.0, 1.0;
    out.j_target << -c, -s, 0.0, s, -c, 0.0, 0.0, 0.0, -1.0;
    return out;
}

double edge_cost(const Pose2& x, const Pose2& o, const Pose2& z, double w) {
    const Pose2 h = predict_observation(x, o);
    const double dx = z.x - h.x;
    const double dy = z.y - h.y;
    const double dyaw = wrap_angle(z.yaw - h.yaw);
    return w * (dx * dx + dy * dy + dyaw * dyaw);
}

struct AgentSolve {
    Pose2 pose;
    int iterations = 0;
    double final_cost = 0.0;
};

// Levenberg-Marquardt on one agent's 3-DOF subproblem. Additive damping,
// x10 on a rejected step, /10 on an accepted one; stops on gradient norm
// or the iteration budget. Zero-information systems (no edges or
// all-zero weights) leave the pose untouched.
AgentSolve solve_agent(const std::vector<AnchorNode>& anchors,
                       const std::vector<const PoseEdge*>& edges, const Pose2& initial,
                       const PgoConfig& cfg, int budget) {
    AgentSolve out;
    out.pose = initial;

    const auto total_cost = [&](const Pose2& p) {
        double c = 0.0;
        for (const PoseEdge* e : edges) {
            c += edge_cost(p, anchors[e->anchor_index].pose, e->observation, e->weight);
        }
        return c;
    };

    double cost = total_cost(out.pose);
    double lambda = cfg.damping_init;
    while (out.iterations < budget) {
        Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        for (const PoseEdge* e : edges) {
            const ResidualEval ev =
                eval_edge(out.pose, anchors[e->anchor_index].pose, e->observation);
            h.noalias() += e->weight * ev.j_obs.transpose() * ev.j_obs;
            g.noalias() += e->weight * ev.j_obs.transpose() * ev.r;
        }
        if (g.lpNorm<Eigen::Infinity>() < cfg.grad_tol) break;

        const Eigen::Vector3d step =
            (h + lambda * Eigen::Matrix3d::Identity()).ldlt().solve(-g);
        if (!step.allFinite()) break;
        ++out.iterations;

        const Pose2 candidate(out.pose.x + step(0), out.pose.y + step(1),
                              out.pose.yaw + step(2));
        const double cand_cost = total_cost(candidate);
        if (cand_cost < cost) {
            out.pose = candidate;
            cost = cand_cost;
            lambda = std::max(lambda * 0.1, 1e-12);
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    out.final_cost = cost;
    return out;
}

std::vector<std::vector<const PoseEdge*>> edges_by_agent(const std::vector<PoseEdge>& edges,
                                                         std::size_t n_agents) {
    std::vector<std::vector<const PoseEdge*>> grouped(n_agents);
    for (const PoseEdge& e : edges) {
        if (e.agent_index < 0 || e.agent_index >= static_cast<int>(n_agents)) {
            throw std::invalid_argument("pgo: edge references an unknown agent");
        }
        grouped[e.agent_index].push_back(&e);
    }
    return grouped;
}

// Generic joint edge: either endpoint may be a variable block (index
// into the stacked state) or a fixed pose.
struct JointEdge {
    int obs_block = -1;     // -1: observer fixed at obs_fixed
    Pose2 obs_fixed;
    int target_block = -1;  // -1: target fixed at target_fixed
    Pose2 target_fixed;
    Pose2 z;
    double w = 0.0;
};

struct JointSolve {
    std::vector<Pose2> blocks;
    int iterations = 0;
    double final_cost = 0.0;
};

JointSolve solve_joint(std::vector<Pose2> blocks, const std::vector<JointEdge>& edges,
                       const PgoConfig& cfg, int budget) {
    const int n = static_cast<int>(blocks.size());
    const auto pose_of = [&](int block, const Pose2& fixed) -> const Pose2& {
        return block < 0 ? fixed : blocks[static_cast<std::size_t>(block)];
    };
    const auto total_cost = [&]() {
        double c = 0.0;
        for (const JointEdge& e : edges) {
            c += edge_cost(pose_of(e.obs_block, e.obs_fixed),
                           pose_of(e.target_block, e.target_fixed), e.z, e.w);
        }
        return c;
    };

    JointSolve out;
    double cost = total_cost();
    double lambda = cfg.damping_init;
    while (out.iterations < budget && n > 0) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3 * n, 3 * n);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * n);
        for (const JointEdge& e : edges) {
            const ResidualEval ev = eval_edge(pose_of(e.obs_block, e.obs_fixed),
                                              pose_of(e.target_block, e.target_fixed), e.z);
            if (e.obs_block >= 0) {
                const int i = 3 * e.obs_block;
                h.block<3, 3>(i, i).noalias() += e.w * ev.j_obs.transpose() * ev.j_obs;
                g.segment<3>(i).noalias() += e.w * ev.j_obs.transpose() * ev.r;
            }
            if (e.target_block >= 0) {
                const int k = 3 * e.target_block;
                h.block<3, 3>(k, k).noalias() += e.w * ev.j_target.transpose() * ev.j_target;
                g.segment<3>(k).noalias() += e.w * ev.j_target.transpose() * ev.r;
            }
            if (e.obs_block >= 0 && e.target_block >= 0) {
                const int i = 3 * e.obs_block;
                const int k = 3 * e.target_block;
                const Eigen::Matrix3d cross_term = e.w * ev.j_obs.transpose() * ev.j_target;
                h.block<3, 3>(i, k).noalias() += cross_term;
                h.block<3, 3>(k, i).noalias() += cross_term.transpose();
            }
        }
        if (g.lpNorm<Eigen::Infinity>() < cfg.grad_tol) break;

        const Eigen::VectorXd step =
            (h + lambda * Eigen::MatrixXd::Identity(3 * n, 3 * n)).ldlt().solve(-g);
        if (!step.allFinite()) break;
        ++out.iterations;

        std::vector<Pose2> candidate = blocks;
        for (int b = 0; b < n; ++b) {
            candidate[b] = Pose2(blocks[b].x + step(3 * b), blocks[b].y + step(3 * b + 1),
                                 blocks[b].yaw + step(3 * b + 2));
        }
        std::swap(blocks, candidate);
        const double cand_cost = total_cost();
        if (cand_cost < cost) {
            cost = cand_cost;
            lambda = std::max(lambda * 0.1, 1e-12);
        } else {
            std::swap(blocks, candidate);  // reject
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }
    out.blocks = std::move(blocks);
    out.final_cost = cost;
    return out;
}

}  // namespace

Graph build_graph(const geometry::DetectionSet& stage1, const std::vector<LateAgent>& late_agents,
                  const PgoConfig& cfg) {
    Graph g;
    g.anchors = extract_anchors(stage1);
    g.edges = associate(g.anchors, late_agents, cfg);
    return g;
}

PgoResult optimize(const std::vector<AnchorNode>& anchors, const std::vector<PoseEdge>& edges,
                   const std::vector<LateAgent>& agents, const PgoConfig& cfg) {
    const auto grouped = edges_by_agent(edges, agents.size());
    PgoResult out;
    for (std::size_t ai = 0; ai < agents.size(); ++ai) {
        const AgentSolve solved =
            solve_agent(anchors, grouped[ai], agents[ai].pose_estimate, cfg, cfg.max_iters);
        out.corrected[agents[ai].agent_id] = solved.pose;
        out.edges_per_agent[agents[ai].agent_id] = static_cast<int>(grouped[ai].size());
        out.iterations_used = std::max(out.iterations_used, solved.iterations);
        out.final_cost += solved.final_cost;
    }
    return out;
}

PgoResult optimize_joint(const std::vector<AnchorNode>& anchors,
                         const std::vector<PoseEdge>& edges,
                         const std::vector<LateAgent>& agents, const PgoConfig& cfg) {
    std::vector<Pose2> blocks;
    blocks.reserve(agents.size());
    for (const LateAgent& a : agents) blocks.push_back(a.pose_estimate);

    std::vector<JointEdge> joint;
    joint.reserve(edges.size());
    for (const PoseEdge& e : edges) {
        JointEdge je;
        je.obs_block = e.agent_index;
        je.target_block = -1;
        je.target_fixed = anchors[e.anchor_index].pose;
        je.z = e.observation;
        je.w = e.weight;
        joint.push_back(je);
    }

    const JointSolve solved = solve_joint(std::move(blocks), joint, cfg, cfg.max_iters);
    const auto grouped = edges_by_agent(edges, agents.size());
    PgoResult out;
    out.iterations_used = solved.iterations;
    out.final_cost = solved.final_cost;
    for (std::size_t ai = 0; ai < agents.size(); ++ai) {
        out.corrected[agents[ai].agent_id] = solved.blocks[ai];
        out.edges_per_agent[agents[ai].agent_id] = static_cast<int>(grouped[ai].size());
    }
    return out;
}

PgoResult run_agpgo(const geometry::DetectionSet& stage1, const std::vector<LateAgent>& late_agents,
                    const PgoConfig& cfg) {
    const std::vector<AnchorNode> anchors = extract_anchors(stage1);
    std::vector<LateAgent> current = late_agents;
    std::vector<int> used(current.size(), 0);

    PgoResult out;
    std::vector<PoseEdge> edges;
    for (int round = 0; round < std::max(1, cfg.outer_rounds); ++round) {
        edges = associate(anchors, current, cfg);
        const auto grouped = edges_by_agent(edges, current.size());
        out.final_cost = 0.0;
        for (std::size_t ai = 0; ai < current.size(); ++ai) {
            out.edges_per_agent[current[ai].agent_id] = static_cast<int>(grouped[ai].size());
            if (static_cast<int>(grouped[ai].size()) < cfg.min_edges) continue;
            const int budget = std::max(0, cfg.max_iters - used[ai]);
            const AgentSolve solved =
                solve_agent(anchors, grouped[ai], current[ai].pose_estimate, cfg, budget);
            current[ai].pose_estimate = solved.pose;
            used[ai] += solved.iterations;
            out.final_cost += solved.final_cost;
        }
    }
    for (std::size_t ai = 0; ai < current.size(); ++ai) {
        out.corrected[current[ai].agent_id] = current[ai].pose_estimate;
        out.iterations_used = std::max(out.iterations_used, used[ai]);
    }
    return out;
}

AllVariableResult run_all_variable(const geometry::DetectionSet& stage1,
                                   const geometry::Pose2& ego_pose,
                                   const std::vector<LateAgent>& late_agents,
                                   const PgoConfig& cfg) {
    std::vector<AnchorNode> anchors = extract_anchors(stage1);
    const int n_anchors = static_cast<int>(anchors.size());
    const int n_agents = static_cast<int>(late_agents.size());
    std::vector<LateAgent> current = late_agents;

    // The stage-1 boxes are the ego's own observations of the object
    // nodes; the ego pose is the fixed reference. The observations are
    // taken once, before anything moves.
    std::vector<JointEdge> pins;
    pins.reserve(anchors.size());
    for (int k = 0; k < n_anchors; ++k) {
        JointEdge je;
        je.obs_block = -1;
        je.obs_fixed = ego_pose;
        je.target_block = k;
        je.z = predict_observation(ego_pose, anchors[k].pose);
        const double c = std::max(0.0, anchors[k].confidence);
        je.w = std::pow(c, cfg.gamma) * std::pow(c, cfg.beta);
        pins.push_back(je);
    }

    int used = 0;
    double final_cost = 0.0;
    std::map<std::string, int> edge_counts;
    for (int round = 0; round < std::max(1, cfg.outer_rounds); ++round) {
        // Joint agent-object graph: every detection either matches an
        // existing object node or spawns a new variable node at its
        // projected pose. Spawned nodes are shared across agents, so one
        // agent's localization error can propagate to another -- the
        // contagion that fixed anchors are designed to prevent.
        std::vector<AnchorNode> objects = anchors;
        std::vector<JointEdge> joint = pins;
        edge_counts.clear();
        for (int ai = 0; ai < n_agents; ++ai) {
            const auto& dets = current[ai].detections.items;
            std::vector<char> matched(dets.size(), 0);
            int count = 0;
            for (const auto& [d, k] : gated_pairs(objects, current[ai], cfg)) {
                matched[static_cast<std::size_t>(d)] = 1;
                JointEdge je;
                je.obs_block = ai;  // agent block; offset applied after spawning
                je.target_block = k;
                je.z = Pose2(dets[static_cast<std::size_t>(d)].x,
                             dets[static_cast<std::size_t>(d)].y,
                             dets[static_cast<std::size_t>(d)].yaw);
                je.w = std::pow(std::max(0.0, dets[static_cast<std::size_t>(d)].confidence),
                                cfg.gamma) *
                       std::pow(std::max(0.0, objects[static_cast<std::size_t>(k)].confidence),
                                cfg.beta);
                joint.push_back(je);
                ++count;
            }
            for (std::size_t d = 0; d < dets.size(); ++d) {
                if (matched[d]) continue;
                const Pose2 local(dets[d].x, dets[d].y, dets[d].yaw);
                const Pose2 projected = geometry::compose(current[ai].pose_estimate, local);
                objects.push_back({projected, dets[d].confidence, dets[d].class_id});
                JointEdge je;
                je.obs_block = ai;
                je.target_block = static_cast<int>(objects.size()) - 1;
                je.z = local;
                je.w = std::pow(std::max(0.0, dets[d].confidence), cfg.gamma) *
                       std::pow(std::max(0.0, dets[d].confidence), cfg.beta);
                joint.push_back(je);
                ++count;
            }
            edge_counts[current[ai].agent_id] = count;
        }

        const int n_objects = static_cast<int>(objects.size());
        for (JointEdge& je : joint) {
            if (je.obs_block >= 0) je.obs_block += n_objects;  // agents after objects
        }

        std::vector<Pose2> blocks;
        blocks.reserve(static_cast<std::size_t>(n_objects + n_agents));
        for (const AnchorNode& o : objects) blocks.push_back(o.pose);
        for (const LateAgent& a : current) blocks.push_back(a.pose_estimate);

        const JointSolve solved =
            solve_joint(std::move(blocks), joint, cfg, std::max(0, cfg.max_iters - used));
        used += solved.iterations;
        final_cost = solved.final_cost;
        for (int k = 0; k < n_anchors; ++k) anchors[k].pose = solved.blocks[k];
        for (int ai = 0; ai < n_agents; ++ai) {
            current[ai].pose_estimate = solved.blocks[static_cast<std::size_t>(n_objects + ai)];
        }
    }

    AllVariableResult out;
    out.anchors = std::move(anchors);
    out.agents.iterations_used = used;
    out.agents.final_cost = final_cost;
    for (int ai = 0; ai < n_agents; ++ai) {
        out.agents.corrected[current[ai].agent_id] = current[ai].pose_estimate;
        out.agents.edges_per_agent[current[ai].agent_id] = edge_counts[current[ai].agent_id];
    }
    return out;
}

}  // namespace hydra::pgo
