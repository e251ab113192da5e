#include "hydra/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace hydra::runner {

using geometry::DetectionSet;
using geometry::Pose2;

Method parse_method(const std::string& name) {
    if (name == "no_fusion") return Method::NoFusion;
    if (name == "late_only") return Method::LateOnly;
    if (name == "intermediate_only") return Method::IntermediateOnly;
    if (name == "hydra") return Method::Hydra;
    if (name == "hydra_no_classifier") return Method::HydraNoClassifier;
    if (name == "hydra_no_pgo") return Method::HydraNoPgo;
    if (name == "hydra_all_variable_pgo") return Method::HydraAllVariablePgo;
    throw config::ConfigError(
        "unknown method '" + name +
        "' (expected one of: no_fusion, late_only, intermediate_only, hydra, "
        "hydra_no_classifier, hydra_no_pgo, hydra_all_variable_pgo)");
}

const char* method_name(Method m) {
    switch (m) {
        case Method::NoFusion: return "no_fusion";
        case Method::LateOnly: return "late_only";
        case Method::IntermediateOnly: return "intermediate_only";
        case Method::Hydra: return "hydra";
        case Method::HydraNoClassifier: return "hydra_no_classifier";
        case Method::HydraNoPgo: return "hydra_no_pgo";
        case Method::HydraAllVariablePgo: return "hydra_all_variable_pgo";
    }
    return "?";
}

config::Tree default_tree() {
    config::Tree t;
    t.set("run.method", "hydra");
    t.set("run.jobs", "1");
    t.set("sim.seed", "42");
    t.set("sim.n_frames", "50");
    t.set("sim.map_extent_x", "140.8");
    t.set("sim.map_extent_y", "40.0");
    t.set("sim.pose_noise_sigma", "0.0");
    t.set("sim.heading_noise_sigma", "0.0");
    t.set("sim.objects.vehicle", "14");
    t.set("sim.objects.pedestrian", "8");
    t.set("sim.objects.truck", "4");
    t.set("sim.aux_clones", "0");
    t.set("classifier.sigma_temp", "0.5");
    t.set("classifier.tau", "0.2");
    t.set("classifier.match_min_iou", "0.01");
    t.set("classifier.iou_mode", "bev_times_height");
    t.set("pgo.gate_dist", "3.0");
    t.set("pgo.gate_yaw", "0.5236");
    t.set("pgo.gamma", "1.0");
    t.set("pgo.beta", "1.0");
    t.set("pgo.max_iters", "50");
    t.set("pgo.grad_tol", "1e-8");
    t.set("pgo.damping_init", "1e-4");
    t.set("pgo.outer_rounds", "3");
    t.set("pgo.min_edges", "4");
    t.set("fusion.nms_iou", "0.3");
    t.set("fusion.score_floor", "0.1");
    t.set("fusion.per_class", "true");
    return t;
}

namespace {

void check_range(const config::Tree& t, const std::string& key, double v, double lo, double hi,
                 bool lo_open = false, bool hi_open = false) {
    const bool ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    if (!ok) {
        t.fail(key, "value " + std::to_string(v) + " outside " + (lo_open ? "(" : "[") +
                        std::to_string(lo) + ", " + std::to_string(hi) + (hi_open ? ")" : "]"));
    }
}

sim::AgentSpec parse_agent(const config::Tree& t, const std::string& id) {
    const std::string p = "agent." + id + ".";
    sim::AgentSpec spec;
    spec.agent_id = id;

    const std::string kind = t.get_string(p + "kind", "");
    if (kind == "ego") {
        spec.kind = sim::AgentKind::Ego;
    } else if (kind == "homogeneous") {
        spec.kind = sim::AgentKind::Homogeneous;
    } else if (kind == "het_latent") {
        spec.kind = sim::AgentKind::HetLatent;
    } else if (kind == "het_arch") {
        spec.kind = sim::AgentKind::HetArch;
    } else {
        t.fail(p + "kind", "expected ego|homogeneous|het_latent|het_arch, got '" + kind + "'");
    }

    // Kind-based decode defaults; explicit keys override below.
    switch (spec.kind) {
        case sim::AgentKind::Ego:
        case sim::AgentKind::Homogeneous:
            spec.decode.mode = sim::DecodeModel::Mode::Faithful;
            break;
        case sim::AgentKind::HetLatent:
            spec.decode.mode = sim::DecodeModel::Mode::Degraded;
            spec.decode.drop_prob = 0.4;
            spec.decode.offset_sigma = 3.0;
            spec.decode.hallucination_rate = 2.0;
            break;
        case sim::AgentKind::HetArch:
            spec.decode.mode = sim::DecodeModel::Mode::Degraded;
            spec.decode.drop_prob = 0.7;
            spec.decode.offset_sigma = 4.0;
            spec.decode.hallucination_rate = 3.0;
            break;
    }

    spec.detect.recall_prob = t.get_double(p + "recall_prob", spec.detect.recall_prob);
    spec.detect.pos_sigma = t.get_double(p + "pos_sigma", spec.detect.pos_sigma);
    spec.detect.yaw_sigma = t.get_double(p + "yaw_sigma", spec.detect.yaw_sigma);
    spec.detect.conf_mean = t.get_double(p + "conf_mean", spec.detect.conf_mean);
    spec.detect.conf_spread = t.get_double(p + "conf_spread", spec.detect.conf_spread);
    spec.detect.fp_rate = t.get_double(p + "fp_rate", spec.detect.fp_rate);
    spec.detect.fov_range = t.get_double(p + "fov_range", spec.detect.fov_range);
    spec.detect.range_scale = t.get_double(p + "range_scale", spec.detect.range_scale);
    check_range(t, p + "recall_prob", spec.detect.recall_prob, 0.0, 1.0);
    check_range(t, p + "pos_sigma", spec.detect.pos_sigma, 0.0, 100.0);
    check_range(t, p + "yaw_sigma", spec.detect.yaw_sigma, 0.0, geometry::kPi);
    check_range(t, p + "conf_mean", spec.detect.conf_mean, 0.0, 1.0);
    check_range(t, p + "conf_spread", spec.detect.conf_spread, 0.0, 1.0);
    check_range(t, p + "fp_rate", spec.detect.fp_rate, 0.0, 100.0);
    check_range(t, p + "fov_range", spec.detect.fov_range, 1.0, 1000.0);
    check_range(t, p + "range_scale", spec.detect.range_scale, 0.8, 1.2);

    const std::string mode =
        t.get_string(p + "decode.mode",
                     spec.decode.mode == sim::DecodeModel::Mode::Faithful ? "faithful" : "degraded");
    if (mode == "faithful") {
        spec.decode.mode = sim::DecodeModel::Mode::Faithful;
    } else if (mode == "degraded") {
        spec.decode.mode = sim::DecodeModel::Mode::Degraded;
    } else {
        t.fail(p + "decode.mode", "expected faithful|degraded, got '" + mode + "'");
    }
    spec.decode.jitter_sigma = t.get_double(p + "decode.jitter_sigma", spec.decode.jitter_sigma);
    spec.decode.conf_jitter = t.get_double(p + "decode.conf_jitter", spec.decode.conf_jitter);
    spec.decode.drop_prob = t.get_double(p + "decode.drop_prob", spec.decode.drop_prob);
    spec.decode.offset_sigma = t.get_double(p + "decode.offset_sigma", spec.decode.offset_sigma);
    spec.decode.conf_noise = t.get_double(p + "decode.conf_noise", spec.decode.conf_noise);
    spec.decode.hallucination_rate =
        t.get_double(p + "decode.hallucination_rate", spec.decode.hallucination_rate);
    check_range(t, p + "decode.jitter_sigma", spec.decode.jitter_sigma, 0.0, 10.0);
    check_range(t, p + "decode.conf_jitter", spec.decode.conf_jitter, 0.0, 1.0);
    check_range(t, p + "decode.drop_prob", spec.decode.drop_prob, 0.0, 1.0);
    check_range(t, p + "decode.offset_sigma", spec.decode.offset_sigma, 0.0, 100.0);
    check_range(t, p + "decode.conf_noise", spec.decode.conf_noise, 0.0, 1.0);
    check_range(t, p + "decode.hallucination_rate", spec.decode.hallucination_rate, 0.0, 100.0);
    return spec;
}

}  // namespace

RunConfig build_run_config(const config::Tree& tree) {
    RunConfig cfg;
    cfg.method = parse_method(tree.get_string("run.method", "hydra"));
    cfg.jobs = tree.get_int("run.jobs", 1);
    if (cfg.jobs < 1) tree.fail("run.jobs", "must be >= 1");

    sim::ScenarioConfig& sc = cfg.scenario;
    sc.seed = tree.get_u64("sim.seed", 42);
    sc.n_frames = tree.get_int("sim.n_frames", 50);
    if (sc.n_frames < 0) tree.fail("sim.n_frames", "must be >= 0");
    sc.map_extent_x = tree.get_double("sim.map_extent_x", 140.8);
    sc.map_extent_y = tree.get_double("sim.map_extent_y", 40.0);
    check_range(tree, "sim.map_extent_x", sc.map_extent_x, 10.0, 10000.0);
    check_range(tree, "sim.map_extent_y", sc.map_extent_y, 10.0, 10000.0);
    sc.pose_noise_sigma = tree.get_double("sim.pose_noise_sigma", 0.0);
    sc.heading_noise_sigma_deg = tree.get_double("sim.heading_noise_sigma", 0.0);
    check_range(tree, "sim.pose_noise_sigma", sc.pose_noise_sigma, 0.0, 100.0);
    check_range(tree, "sim.heading_noise_sigma", sc.heading_noise_sigma_deg, 0.0, 180.0);
    sc.object_counts[0] = tree.get_int("sim.objects.vehicle", 14);
    sc.object_counts[1] = tree.get_int("sim.objects.pedestrian", 8);
    sc.object_counts[2] = tree.get_int("sim.objects.truck", 4);
    for (int c = 0; c < 3; ++c) {
        if (sc.object_counts[static_cast<std::size_t>(c)] < 0) {
            tree.fail(std::string("sim.objects.") + eval::class_name(c), "must be >= 0");
        }
    }
    // Crowding check before the rejection sampler has to discover it.
    double blocked = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto& s = sim::kClassSizes[static_cast<std::size_t>(c)];
        const double r = 0.5 * std::hypot(s[0], s[1]);
        blocked += sc.object_counts[static_cast<std::size_t>(c)] * geometry::kPi * 4.0 * r * r;
    }
    if (blocked > 2.0 * sc.map_extent_x * 2.0 * sc.map_extent_y) {
        tree.fail("sim.objects.vehicle", "object counts too dense for the map extent");
    }

    std::vector<std::string> agent_ids;
    for (const std::string& key : tree.keys_with_prefix("agent.")) {
        const std::size_t dot = key.find('.', 6);
        if (dot == std::string::npos) tree.fail(key, "expected agent.<id>.<field>");
        const std::string id = key.substr(6, dot - 6);
        if (agent_ids.empty() || agent_ids.back() != id) agent_ids.push_back(id);
    }
    for (const std::string& id : agent_ids) sc.agents.push_back(parse_agent(tree, id));

    const int clones = tree.get_int("sim.aux_clones", 0);
    if (clones < 0) tree.fail("sim.aux_clones", "must be >= 0");
    const std::size_t originals = sc.agents.size();
    for (int c = 1; c <= clones; ++c) {
        for (std::size_t i = 0; i < originals; ++i) {
            if (sc.agents[i].kind == sim::AgentKind::Ego) continue;
            sim::AgentSpec clone = sc.agents[i];
            clone.agent_id += "#" + std::to_string(c);
            sc.agents.push_back(clone);
        }
    }

    int n_ego = 0;
    for (const sim::AgentSpec& a : sc.agents) n_ego += a.kind == sim::AgentKind::Ego ? 1 : 0;
    if (n_ego != 1) {
        throw config::ConfigError("scenario must define exactly one agent with kind = ego (found " +
                                  std::to_string(n_ego) + ")");
    }

    cfg.classifier.sigma_temp = tree.get_double("classifier.sigma_temp", 0.5);
    check_range(tree, "classifier.sigma_temp", cfg.classifier.sigma_temp, 0.0, 100.0, true);
    cfg.classifier.tau = tree.get_double("classifier.tau", 0.2);
    check_range(tree, "classifier.tau", cfg.classifier.tau, 0.0, 1.0);
    cfg.classifier.match_min_iou = tree.get_double("classifier.match_min_iou", 0.01);
    check_range(tree, "classifier.match_min_iou", cfg.classifier.match_min_iou, 0.0, 1.0, false,
                true);
    const std::string iou_mode = tree.get_string("classifier.iou_mode", "bev_times_height");
    if (iou_mode == "bev") {
        cfg.classifier.iou_mode = geometry::IouMode::Bev;
    } else if (iou_mode == "bev_times_height") {
        cfg.classifier.iou_mode = geometry::IouMode::BevTimesHeight;
    } else {
        tree.fail("classifier.iou_mode", "expected bev|bev_times_height, got '" + iou_mode + "'");
    }

    cfg.pgo.gate_dist = tree.get_double("pgo.gate_dist", 3.0);
    check_range(tree, "pgo.gate_dist", cfg.pgo.gate_dist, 0.0, 1000.0, true);
    cfg.pgo.gate_yaw = tree.get_double("pgo.gate_yaw", 0.5236);
    check_range(tree, "pgo.gate_yaw", cfg.pgo.gate_yaw, 0.0, geometry::kPi, true);
    cfg.pgo.gamma = tree.get_double("pgo.gamma", 1.0);
    cfg.pgo.beta = tree.get_double("pgo.beta", 1.0);
    check_range(tree, "pgo.gamma", cfg.pgo.gamma, 0.0, 10.0);
    check_range(tree, "pgo.beta", cfg.pgo.beta, 0.0, 10.0);
    cfg.pgo.max_iters = tree.get_int("pgo.max_iters", 50);
    if (cfg.pgo.max_iters < 0) tree.fail("pgo.max_iters", "must be >= 0");
    cfg.pgo.grad_tol = tree.get_double("pgo.grad_tol", 1e-8);
    check_range(tree, "pgo.grad_tol", cfg.pgo.grad_tol, 0.0, 1.0, true);
    cfg.pgo.damping_init = tree.get_double("pgo.damping_init", 1e-4);
    check_range(tree, "pgo.damping_init", cfg.pgo.damping_init, 0.0, 1e6, true);
    cfg.pgo.outer_rounds = tree.get_int("pgo.outer_rounds", 3);
    if (cfg.pgo.outer_rounds < 1) tree.fail("pgo.outer_rounds", "must be >= 1");
    cfg.pgo.min_edges = tree.get_int("pgo.min_edges", 4);
    if (cfg.pgo.min_edges < 1) tree.fail("pgo.min_edges", "must be >= 1");

    cfg.fusion.nms_iou = tree.get_double("fusion.nms_iou", 0.3);
    check_range(tree, "fusion.nms_iou", cfg.fusion.nms_iou, 0.0, 1.0, true, true);
    cfg.fusion.score_floor = tree.get_double("fusion.score_floor", 0.1);
    check_range(tree, "fusion.score_floor", cfg.fusion.score_floor, 0.0, 1.0, false, true);
    cfg.fusion.per_class = tree.get_bool("fusion.per_class", true);

    const std::vector<std::string> leftover = tree.unconsumed();
    if (!leftover.empty()) {
        throw config::ConfigError("unknown " + leftover.front());
    }
    return cfg;
}

namespace {

struct FrameOutput {
    DetectionSet b_final;
    std::vector<geometry::Detection> truth;
    std::vector<domain::DomainVerdict> verdicts;
    double pose_err_before = 0.0;  // summed over late agents
    double pose_err_after = 0.0;
    int n_late = 0;
    int pgo_iterations = 0;
};

bool method_uses_pgo(Method m) {
    return m == Method::Hydra || m == Method::HydraNoClassifier ||
           m == Method::HydraAllVariablePgo;
}

FrameOutput run_frame(const RunConfig& cfg, int frame) {
    const sim::ScenarioConfig& sc = cfg.scenario;
    const sim::Scene scene = sim::generate_scene(sc, frame);

    int ego_idx = -1;
    for (std::size_t i = 0; i < sc.agents.size(); ++i) {
        if (sc.agents[i].kind == sim::AgentKind::Ego) ego_idx = static_cast<int>(i);
    }

    fusion::AgentFrame ego;
    ego.agent_id = sc.agents[static_cast<std::size_t>(ego_idx)].agent_id;
    ego.reported_pose = scene.agent_poses[static_cast<std::size_t>(ego_idx)];  // ego pose is exact

    std::vector<fusion::AgentFrame> aux;
    std::map<std::string, int> index_of;
    std::map<std::string, Pose2> true_pose_of;
    for (std::size_t i = 0; i < sc.agents.size(); ++i) {
        index_of[sc.agents[i].agent_id] = static_cast<int>(i);
        if (static_cast<int>(i) == ego_idx) continue;
        fusion::AgentFrame af;
        af.agent_id = sc.agents[i].agent_id;
        af.detections = sim::sense(sc, static_cast<int>(i), scene, frame);
        af.ego_decode = sim::decode_surrogate(sc, static_cast<int>(i), af.detections, frame);
        rng::Stream noise = sim::streams::make(sc, frame, sim::streams::kPoseNoise,
                                               static_cast<std::uint64_t>(i));
        af.reported_pose = sim::inject_pose_noise(scene.agent_poses[i], sc.pose_noise_sigma,
                                                  sc.heading_noise_sigma_deg, noise);
        true_pose_of[af.agent_id] = scene.agent_poses[i];
        aux.push_back(std::move(af));
    }

    const fusion::Stage1Provider provider = [&](const std::vector<std::string>& ids) {
        std::vector<int> indices;
        indices.reserve(ids.size());
        for (const std::string& id : ids) indices.push_back(index_of.at(id));
        return sim::stage1_oracle(sc, indices, scene, frame);
    };

    FrameOutput out;
    out.truth = scene.objects;

    const bool pgo_on = method_uses_pgo(cfg.method) && cfg.pgo.max_iters > 0;
    switch (cfg.method) {
        case Method::NoFusion: {
            out.b_final = fusion::nms(provider({}), cfg.fusion);
            break;
        }
        case Method::LateOnly: {
            std::vector<std::pair<Pose2, DetectionSet>> pooled;
            for (const fusion::AgentFrame& a : aux) {
                pooled.emplace_back(a.reported_pose, a.detections);
            }
            out.b_final = fusion::nms(fusion::pool_to_global(provider({}), pooled), cfg.fusion);
            break;
        }
        case Method::IntermediateOnly: {
            std::vector<std::string> all_ids;
            for (const fusion::AgentFrame& a : aux) all_ids.push_back(a.agent_id);
            out.b_final = fusion::nms(provider(all_ids), cfg.fusion);
            break;
        }
        default: {
            fusion::PipelineOptions opts;
            opts.classifier_enabled = cfg.method != Method::HydraNoClassifier;
            opts.pgo_enabled = pgo_on;
            opts.all_variable_pgo = cfg.method == Method::HydraAllVariablePgo;
            fusion::PipelineResult pr = fusion::hydra_pipeline(
                ego, aux, provider, cfg.classifier, cfg.pgo, cfg.fusion, opts);
            out.b_final = std::move(pr.b_final);
            out.verdicts = std::move(pr.verdicts);
            for (const auto& [id, corrected] : pr.pgo_result.corrected) {
                const auto before =
                    std::find_if(aux.begin(), aux.end(),
                                 [&](const fusion::AgentFrame& a) { return a.agent_id == id; });
                const Pose2& truth = true_pose_of.at(id);
                const geometry::PoseDelta db = geometry::pose_minus(before->reported_pose, truth);
                const geometry::PoseDelta da = geometry::pose_minus(corrected, truth);
                out.pose_err_before += std::hypot(db.dx, db.dy);
                out.pose_err_after += std::hypot(da.dx, da.dy);
                ++out.n_late;
            }
            out.pgo_iterations = pr.pgo_result.iterations_used;
            break;
        }
    }

    if (out.verdicts.empty()) {
        // Non-classifying methods still report the scores for diagnostics.
        for (const fusion::AgentFrame& a : aux) {
            out.verdicts.push_back(
                domain::classify_agent(a.agent_id, a.detections, a.ego_decode, cfg.classifier));
        }
    }
    return out;
}

}  // namespace

RunResult run_method(const RunConfig& cfg) {
    const int n = cfg.scenario.n_frames;
    std::vector<FrameOutput> frames(static_cast<std::size_t>(n));

    const int workers = std::max(1, std::min(cfg.jobs, n > 0 ? n : 1));
    if (workers <= 1) {
        for (int f = 0; f < n; ++f) frames[static_cast<std::size_t>(f)] = run_frame(cfg, f);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int f = next.fetch_add(1); f < n; f = next.fetch_add(1)) {
                        frames[static_cast<std::size_t>(f)] = run_frame(cfg, f);
                    }
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (const std::exception_ptr& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    RunResult out;
    out.frames = n;
    out.pgo_enabled = method_uses_pgo(cfg.method) && cfg.pgo.max_iters > 0;

    eval::ApAccumulator acc;
    std::map<std::string, std::vector<double>> kind_scores;
    std::map<std::string, std::string> kind_of;
    for (const sim::AgentSpec& a : cfg.scenario.agents) {
        kind_of[a.agent_id] = sim::kind_name(a.kind);
    }

    double before_sum = 0.0;
    double after_sum = 0.0;
    long late_count = 0;
    double iter_sum = 0.0;
    int pgo_frames = 0;
    for (FrameOutput& f : frames) {
        acc.add_frame(f.b_final, f.truth);
        for (const domain::DomainVerdict& v : f.verdicts) {
            kind_scores[kind_of.at(v.agent_id)].push_back(v.s_domain);
        }
        out.frame_verdicts.push_back(std::move(f.verdicts));
        before_sum += f.pose_err_before;
        after_sum += f.pose_err_after;
        late_count += f.n_late;
        if (f.n_late > 0) {
            iter_sum += f.pgo_iterations;
            ++pgo_frames;
        }
    }
    out.report = acc.finalize();
    if (late_count > 0) {
        out.mean_pose_error_before = before_sum / static_cast<double>(late_count);
        out.mean_pose_error_after = after_sum / static_cast<double>(late_count);
    }
    if (pgo_frames > 0) out.mean_pgo_iterations = iter_sum / pgo_frames;

    for (const auto& [kind, scores] : kind_scores) {
        ScoreStats st;
        st.count = static_cast<int>(scores.size());
        st.min = std::numeric_limits<double>::infinity();
        st.max = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        for (double s : scores) {
            sum += s;
            st.min = std::min(st.min, s);
            st.max = std::max(st.max, s);
        }
        st.mean = st.count > 0 ? sum / st.count : 0.0;
        if (st.count == 0) {
            st.min = 0.0;
            st.max = 0.0;
        }
        out.scores_by_kind[kind] = st;
    }
    return out;
}

}  // namespace hydra::runner
