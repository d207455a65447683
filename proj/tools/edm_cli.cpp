// Command-line front end: schedules, sampling, encoding, toy training,
// augmentation, and the error-analysis procedures, all driven by explicit
// seeds so every run is reproducible byte for byte.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "edm/analysis.hpp"
#include "edm/augment.hpp"
#include "edm/dataset.hpp"
#include "edm/denoiser.hpp"
#include "edm/sampler.hpp"
#include "edm/schedule.hpp"
#include "edm/training.hpp"

namespace {

using namespace edm;

constexpr int kReportFormatVersion = 1;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("EDM_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    for (int v : parse_int_list(s)) {
        if (v <= 0) throw CLI::ValidationError("widths", "layer widths must be positive");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    for (const std::string& l : lines) out << l << "\n";
    if (!out.flush()) throw std::runtime_error(path + ": write failed");
}

void write_curve(const std::string& path, const std::string& abscissa_name,
                 const ErrorCurve& curve) {
    std::vector<std::string> lines{abscissa_name + ",mean_" + curve.metric + ",std_" +
                                   curve.metric};
    for (std::size_t i = 0; i < curve.abscissa.size(); ++i)
        lines.push_back(fmt(curve.abscissa[i]) + "," + fmt(curve.mean[i]) + "," +
                        fmt(curve.stddev[i]));
    write_lines(path, lines);
}

// Run report: key,value CSV carrying the fully resolved configuration. Wall
// time goes to stdout only so reruns stay byte-identical.
void write_report(const std::string& path,
                  const std::vector<std::pair<std::string, std::string>>& kv) {
    std::vector<std::string> lines{"key,value",
                                   "format_version," + std::to_string(kReportFormatVersion)};
    for (const auto& [k, v] : kv) lines.push_back(k + "," + v);
    write_lines(path, lines);
}

struct FrameworkOpts {
    std::string framework = "edm";
    int n = 32;
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    ScheduleParams params;
};

void add_framework_flags(CLI::App* cmd, FrameworkOpts& o) {
    cmd->add_option("--framework", o.framework, "Framework preset: edm, vp, ve, iddpm")
        ->check(CLI::IsMember({"edm", "vp", "ve", "iddpm"}))
        ->capture_default_str();
    cmd->add_option("--n", o.n, "Number of solver steps N")->capture_default_str();
    cmd->add_option("--sigma-min", o.sigma_min, "Lowest positive noise level (edm preset)")
        ->capture_default_str();
    cmd->add_option("--sigma-max", o.sigma_max, "Highest noise level (edm preset)")
        ->capture_default_str();
    cmd->add_option("--rho", o.rho, "Step-spacing exponent (edm preset: 7)")
        ->capture_default_str();
    cmd->add_option("--beta-d", o.params.beta_d, "vp schedule beta_d (19.9)")
        ->capture_default_str();
    cmd->add_option("--beta-min", o.params.beta_min, "vp schedule beta_min (0.1)")
        ->capture_default_str();
    cmd->add_option("--eps-s", o.params.eps_s, "vp first sampling time (1e-3)")
        ->capture_default_str();
    cmd->add_option("--ve-sigma-min", o.params.sigma_min, "ve lowest noise level (0.002)")
        ->capture_default_str();
}

Schedule make_schedule(const FrameworkOpts& o) {
    if (o.framework == "vp") return Schedule(ScheduleKind::VP, o.params);
    if (o.framework == "ve") return Schedule(ScheduleKind::VE, o.params);
    return Schedule(ScheduleKind::EDM, o.params); // edm and iddpm share the identity frame
}

StepPlan make_plan(const FrameworkOpts& o, int n) {
    if (o.framework == "vp") return steps_vp(n, o.params.eps_s, o.params);
    if (o.framework == "ve") return steps_ve(n, std::max(o.sigma_min, 0.02), o.sigma_max);
    if (o.framework == "iddpm") return steps_iddpm(n, o.params);
    return steps_edm(n, o.sigma_min, o.sigma_max, o.rho);
}

struct DenoiserHandle {
    std::unique_ptr<Denoiser> denoiser;
    const AnalyticDenoiser* analytic = nullptr; // set when the spec is analytic:<path>
};

// Spec strings: analytic:<dataset-path>, gaussian:<sigma_data>, mlp:<weights-path>.
DenoiserHandle make_denoiser(const std::string& spec, const FrameworkOpts& o, double sigma_data) {
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw CLI::ValidationError("--denoiser",
                                   "expected analytic:<path>, gaussian:<sigma>, or mlp:<path>");
    std::string kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
    DenoiserHandle h;
    if (kind == "analytic") {
        auto d = std::make_unique<AnalyticDenoiser>(dataset_load(arg));
        h.analytic = d.get();
        h.denoiser = std::move(d);
    } else if (kind == "gaussian") {
        h.denoiser = std::make_unique<GaussianDenoiser>(std::stod(arg),
                                                        std::vector<std::size_t>{1});
    } else if (kind == "mlp") {
        auto net = std::make_shared<MlpDenoiser>(MlpDenoiser::load(arg));
        Framework fw = Framework::EDM;
        if (o.framework == "vp") fw = Framework::VP;
        else if (o.framework == "ve") fw = Framework::VE;
        else if (o.framework == "iddpm") fw = Framework::IDDPM;
        std::vector<std::size_t> shape{net->widths().back()};
        h.denoiser = std::make_unique<PrecondDenoiser>(net, fw, sigma_data, shape, o.params);
    } else {
        throw CLI::ValidationError("--denoiser", "unknown denoiser kind '" + kind + "'");
    }
    return h;
}

int run_parallel(int count, int threads, const std::function<void(int)>& body) {
    if (threads < 1) threads = 1;
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return count;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& th : pool) th.join();
    return count;
}

void cmd_steps(const FrameworkOpts& o, const std::string& out) {
    StepPlan plan = make_plan(o, o.n);
    std::vector<std::string> lines{"i,t,sigma"};
    for (std::size_t i = 0; i < plan.t.size(); ++i)
        lines.push_back(std::to_string(i) + "," + fmt(plan.t[i]) + "," + fmt(plan.sigma[i]));
    if (out.empty())
        for (const std::string& l : lines) std::cout << l << "\n";
    else
        write_lines(out, lines);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion-model design-space toolkit: schedules, samplers, toy training, "
                 "and error analysis"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file (flags override it)");

    std::uint64_t seed = default_seed();
    app.add_option("--seed", seed, "Global seed (default: EDM_SEED env or 0)")
        ->capture_default_str();
    int threads = 1;
    app.add_option("--threads", threads, "Worker threads (results do not depend on this)")
        ->capture_default_str();

    // ---- steps ----
    FrameworkOpts steps_o;
    std::string steps_out;
    auto* c_steps = app.add_subcommand("steps", "Print a time-step plan as CSV");
    add_framework_flags(c_steps, steps_o);
    c_steps->add_option("--out", steps_out, "Output CSV path (default: stdout)");

    // ---- make-dataset ----
    std::string mk_kind = "two-point", mk_out;
    int mk_count = 100, mk_dim = 1;
    auto* c_mk = app.add_subcommand("make-dataset", "Write a built-in dataset file");
    c_mk->add_option("--kind", mk_kind, "two-point, gaussian:<sigma_data>, or grid2d")
        ->capture_default_str();
    c_mk->add_option("--count", mk_count, "Sample count (gaussian kind)")->capture_default_str();
    c_mk->add_option("--dim", mk_dim, "Sample dimension (gaussian kind)")->capture_default_str();
    c_mk->add_option("--out", mk_out, "Output dataset path")->required();

    // ---- sample ----
    FrameworkOpts sample_o;
    std::string sample_den = "gaussian:0.5", sample_sampler = "heun", sample_out, sample_report;
    double sample_alpha = 1.0, sample_sigma_data = 0.5, sample_beta = -1.0;
    StochasticParams sp;
    int sample_count = 1;
    auto* c_sample = app.add_subcommand("sample", "Generate endpoints with a chosen sampler");
    add_framework_flags(c_sample, sample_o);
    c_sample->add_option("--denoiser", sample_den, "analytic:<path>, gaussian:<sigma>, mlp:<path>")
        ->capture_default_str();
    c_sample
        ->add_option("--sampler", sample_sampler, "euler, heun, rk2, stochastic, em")
        ->check(CLI::IsMember({"euler", "heun", "rk2", "stochastic", "em"}))
        ->capture_default_str();
    c_sample->add_option("--alpha", sample_alpha, "rk2 stage position, in (0, 1.2]")
        ->capture_default_str();
    c_sample->add_option("--sigma-data", sample_sigma_data, "Data std for mlp preconditioning")
        ->capture_default_str();
    c_sample->add_option("--s-churn", sp.s_churn, "Stochastic churn total (0)")
        ->capture_default_str();
    c_sample->add_option("--s-tmin", sp.s_tmin, "Churn active below this level disabled (0)")
        ->capture_default_str();
    c_sample->add_option("--s-tmax", sp.s_tmax, "Churn active above this level disabled (inf)")
        ->capture_default_str();
    c_sample->add_option("--s-noise", sp.s_noise, "Churn noise inflation (1)")
        ->capture_default_str();
    c_sample->add_option("--beta", sample_beta,
                         "em noise-replacement rate; negative = schedule default")
        ->capture_default_str();
    c_sample->add_option("--count", sample_count, "Number of trajectories")
        ->capture_default_str();
    c_sample->add_option("--out", sample_out, "Endpoint dataset path")->required();
    c_sample->add_option("--report", sample_report, "Run-report CSV path");

    // ---- encode ----
    FrameworkOpts enc_o;
    std::string enc_den = "gaussian:0.5", enc_in, enc_out, enc_report;
    double enc_sigma_data = 0.5;
    auto* c_enc = app.add_subcommand("encode", "Invert the ODE: data to latents");
    add_framework_flags(c_enc, enc_o);
    c_enc->add_option("--denoiser", enc_den, "analytic:<path>, gaussian:<sigma>, mlp:<path>")
        ->capture_default_str();
    c_enc->add_option("--sigma-data", enc_sigma_data, "Data std for mlp preconditioning")
        ->capture_default_str();
    c_enc->add_option("--in", enc_in, "Input dataset")->required();
    c_enc->add_option("--out", enc_out, "Latent dataset path")->required();
    c_enc->add_option("--report", enc_report, "Run-report CSV path");

    // ---- train ----
    std::string tr_data, tr_widths = "2,32,32,1", tr_out, tr_loss_csv, tr_framework = "edm";
    TrainConfig tr_cfg;
    auto* c_train = app.add_subcommand("train", "SGD training of the toy MLP denoiser");
    c_train->add_option("--data", tr_data, "Training dataset")->required();
    c_train->add_option("--widths", tr_widths, "Layer widths, e.g. 2,32,32,1")
        ->capture_default_str();
    c_train->add_option("--framework", tr_framework, "Preconditioning: edm, vp, ve, iddpm")
        ->check(CLI::IsMember({"edm", "vp", "ve", "iddpm"}))
        ->capture_default_str();
    c_train->add_option("--p-mean", tr_cfg.p_mean, "Mean of ln(sigma) during training (-1.2)")
        ->capture_default_str();
    c_train->add_option("--p-std", tr_cfg.p_std, "Std of ln(sigma) during training (1.2)")
        ->capture_default_str();
    c_train->add_option("--sigma-data", tr_cfg.sigma_data, "Assumed data std (0.5)")
        ->capture_default_str();
    c_train->add_option("--lr", tr_cfg.learning_rate, "Learning rate")->capture_default_str();
    c_train->add_option("--batch", tr_cfg.batch_size, "Batch size")->capture_default_str();
    c_train->add_option("--steps", tr_cfg.steps, "SGD steps")->capture_default_str();
    c_train->add_option("--record-every", tr_cfg.record_every, "Loss-record interval")
        ->capture_default_str();
    c_train->add_flag("--augment", tr_cfg.use_augment,
                      "Geometric augmentation with label conditioning (rank-3 data)");
    c_train->add_option("--a-prob", tr_cfg.aug.a_prob, "Augmentation probability (0.12)")
        ->capture_default_str();
    c_train->add_option("--out", tr_out, "Weights output path")->required();
    c_train->add_option("--loss-csv", tr_loss_csv, "Loss-record CSV path");

    // ---- loss-profile ----
    FrameworkOpts lp_o;
    std::string lp_den, lp_data, lp_sigmas, lp_out;
    double lp_sigma_data = 0.5;
    int lp_draws = 1000;
    auto* c_lp = app.add_subcommand("loss-profile", "Per-sigma expected loss of a denoiser");
    add_framework_flags(c_lp, lp_o);
    c_lp->add_option("--denoiser", lp_den, "analytic:<path>, gaussian:<sigma>, mlp:<path>")
        ->required();
    c_lp->add_option("--data", lp_data, "Dataset supplying clean samples")->required();
    c_lp->add_option("--sigmas", lp_sigmas, "Comma list of noise levels (default: log grid)");
    c_lp->add_option("--sigma-data", lp_sigma_data, "Data std for the loss weight")
        ->capture_default_str();
    c_lp->add_option("--draws", lp_draws, "Monte-Carlo draws per level")->capture_default_str();
    c_lp->add_option("--out", lp_out, "Output CSV path")->required();

    // ---- augment ----
    std::string ag_in, ag_out, ag_labels;
    AugmentConstants ag_c;
    auto* c_ag = app.add_subcommand("augment", "Apply the geometric augmentation pipeline");
    c_ag->add_option("--in", ag_in, "Input dataset (rank-3 samples)")->required();
    c_ag->add_option("--a-prob", ag_c.a_prob, "Per-augmentation probability (0.12)")
        ->capture_default_str();
    c_ag->add_option("--a-trans", ag_c.a_trans, "Translation scale (1/8)")->capture_default_str();
    c_ag->add_option("--out", ag_out, "Augmented dataset path")->required();
    c_ag->add_option("--labels-csv", ag_labels, "Conditioning-label CSV path");

    // ---- truncation-scan ----
    FrameworkOpts ts_o;
    std::string ts_den, ts_solver = "euler", ts_out;
    int ts_substeps = 200, ts_trials = 100;
    double ts_alpha = 1.0;
    auto* c_ts = app.add_subcommand("truncation-scan", "Per-step local error vs noise level");
    add_framework_flags(c_ts, ts_o);
    c_ts->add_option("--denoiser", ts_den, "analytic:<path> (ground truth needs the dataset)")
        ->required();
    c_ts->add_option("--solver", ts_solver, "euler, heun, rk2")
        ->check(CLI::IsMember({"euler", "heun", "rk2"}))
        ->capture_default_str();
    c_ts->add_option("--alpha", ts_alpha, "rk2 stage position")->capture_default_str();
    c_ts->add_option("--substeps", ts_substeps, "Fine Euler substeps for ground truth (200)")
        ->capture_default_str();
    c_ts->add_option("--trials", ts_trials, "Trials per step")->capture_default_str();
    c_ts->add_option("--out", ts_out, "Output CSV path")->required();

    // ---- order ----
    FrameworkOpts ord_o;
    std::string ord_den = "gaussian:0.5", ord_sampler = "heun", ord_nlist = "16,32,64,128,256",
                ord_out;
    double ord_alpha = 1.0;
    int ord_trials = 8;
    auto* c_ord = app.add_subcommand("order", "Global convergence-order fit");
    add_framework_flags(c_ord, ord_o);
    c_ord->add_option("--denoiser", ord_den, "analytic:<path>, gaussian:<sigma>, mlp:<path>")
        ->capture_default_str();
    c_ord->add_option("--sampler", ord_sampler, "euler, heun, rk2")
        ->check(CLI::IsMember({"euler", "heun", "rk2"}))
        ->capture_default_str();
    c_ord->add_option("--alpha", ord_alpha, "rk2 stage position")->capture_default_str();
    c_ord->add_option("--n-list", ord_nlist, "Comma list of step counts")->capture_default_str();
    c_ord->add_option("--trials", ord_trials, "Latent draws averaged per N")
        ->capture_default_str();
    c_ord->add_option("--out", ord_out, "Output CSV path")->required();

    // ---- roundtrip ----
    FrameworkOpts rt_o;
    std::string rt_den, rt_data, rt_nlist = "32,64,128,256,512", rt_out;
    int rt_trials = 8;
    auto* c_rt = app.add_subcommand("roundtrip", "Encode/decode error vs step count");
    add_framework_flags(c_rt, rt_o);
    c_rt->add_option("--denoiser", rt_den, "analytic:<path>, gaussian:<sigma>, mlp:<path>")
        ->required();
    c_rt->add_option("--data", rt_data, "Dataset to round-trip")->required();
    c_rt->add_option("--n-list", rt_nlist, "Comma list of step counts")->capture_default_str();
    c_rt->add_option("--trials", rt_trials, "Samples per N (cycled from the dataset)")
        ->capture_default_str();
    c_rt->add_option("--out", rt_out, "Output CSV path")->required();

    // ---- churn ----
    std::string ch_den, ch_out;
    double ch_sigma = 0.5, ch_s_noise = 1.0;
    int ch_iters = 1000, ch_record = 100;
    auto* c_ch = app.add_subcommand("churn", "Fixed-level churn-degradation curve");
    c_ch->add_option("--denoiser", ch_den, "analytic:<path>")->required();
    c_ch->add_option("--sigma", ch_sigma, "Fixed noise level")->capture_default_str();
    c_ch->add_option("--iterations", ch_iters, "Churn cycles")->capture_default_str();
    c_ch->add_option("--s-noise", ch_s_noise, "Noise inflation (1)")->capture_default_str();
    c_ch->add_option("--record-every", ch_record, "Recording interval")->capture_default_str();
    c_ch->add_option("--out", ch_out, "Output CSV path")->required();

    // Let --seed and --threads appear after the subcommand name.
    for (CLI::App* s : app.get_subcommands([](const CLI::App*) { return true; }))
        s->fallthrough();

    CLI11_PARSE(app, argc, argv);

    auto t_start = std::chrono::steady_clock::now();
    try {
        if (c_steps->parsed()) {
            cmd_steps(steps_o, steps_out);
        } else if (c_mk->parsed()) {
            std::vector<Tensor> samples;
            if (mk_kind == "two-point") {
                samples.push_back(Tensor({1}, {-1.0}));
                samples.push_back(Tensor({1}, {1.0}));
            } else if (mk_kind == "grid2d") {
                for (int i = -1; i <= 1; ++i)
                    for (int j = -1; j <= 1; ++j)
                        samples.push_back(
                            Tensor({2}, {static_cast<double>(i), static_cast<double>(j)}));
            } else if (mk_kind.rfind("gaussian:", 0) == 0) {
                double sd = std::stod(mk_kind.substr(9));
                for (int i = 0; i < mk_count; ++i) {
                    RngStream rng(seed, static_cast<std::uint64_t>(i));
                    samples.push_back(
                        gaussian(rng, {static_cast<std::size_t>(mk_dim)}, sd));
                }
            } else {
                throw CLI::ValidationError("--kind", "unknown dataset kind '" + mk_kind + "'");
            }
            dataset_save(Dataset(std::move(samples), mk_kind), mk_out);
        } else if (c_sample->parsed()) {
            if (sample_sampler == "stochastic" &&
                (sample_o.framework == "vp" || sample_o.framework == "ve"))
                throw CLI::ValidationError(
                    "--sampler", "stochastic sampling requires the edm or iddpm framework");
            if (sample_sampler == "em" && sample_o.framework == "vp")
                throw CLI::ValidationError("--sampler",
                                           "em requires an s(t) = 1 framework (not vp)");
            DenoiserHandle h = make_denoiser(sample_den, sample_o, sample_sigma_data);
            Schedule sched = make_schedule(sample_o);
            StepPlan plan = make_plan(sample_o, sample_o.n);
            const std::vector<double>* levels =
                sample_o.framework == "iddpm" ? &iddpm_u_table(sample_o.params) : nullptr;
            std::function<double(double)> beta_fn;
            if (sample_beta >= 0.0) beta_fn = [sample_beta](double) { return sample_beta; };

            std::vector<Tensor> endpoints(static_cast<std::size_t>(sample_count));
            std::vector<std::size_t> shape = h.denoiser->sample_shape();
            run_parallel(sample_count, threads, [&](int i) {
                RngStream rng(seed, static_cast<std::uint64_t>(i));
                Tensor x0 = prior_latent(rng, shape, sched, plan);
                Trajectory traj;
                if (sample_sampler == "euler")
                    traj = sample_euler(*h.denoiser, sched, plan, x0);
                else if (sample_sampler == "heun")
                    traj = sample_heun(*h.denoiser, sched, plan, x0);
                else if (sample_sampler == "rk2")
                    traj = sample_rk2_alpha(*h.denoiser, sched, plan, x0, sample_alpha);
                else if (sample_sampler == "stochastic")
                    traj = sample_stochastic(*h.denoiser, sched, plan, x0, sp, rng, false,
                                             levels);
                else
                    traj = sample_euler_maruyama(*h.denoiser, sched, plan, x0, rng, beta_fn);
                endpoints[static_cast<std::size_t>(i)] = std::move(traj.final);
            });
            dataset_save(Dataset(std::move(endpoints), "endpoints"), sample_out);
            if (!sample_report.empty())
                write_report(sample_report,
                             {{"subcommand", "sample"},
                              {"framework", sample_o.framework},
                              {"denoiser", sample_den},
                              {"sampler", sample_sampler},
                              {"n", std::to_string(sample_o.n)},
                              {"alpha", fmt(sample_alpha)},
                              {"s_churn", fmt(sp.s_churn)},
                              {"s_tmin", fmt(sp.s_tmin)},
                              {"s_tmax", fmt(sp.s_tmax)},
                              {"s_noise", fmt(sp.s_noise)},
                              {"count", std::to_string(sample_count)},
                              {"seed", std::to_string(seed)},
                              {"nfe", std::to_string(h.denoiser->nfe())}});
        } else if (c_enc->parsed()) {
            DenoiserHandle h = make_denoiser(enc_den, enc_o, enc_sigma_data);
            Schedule sched = make_schedule(enc_o);
            StepPlan plan = make_plan(enc_o, enc_o.n);
            Dataset in = dataset_load(enc_in);
            std::vector<Tensor> latents(in.samples.size());
            run_parallel(static_cast<int>(in.samples.size()), threads, [&](int i) {
                latents[static_cast<std::size_t>(i)] =
                    encode(*h.denoiser, sched, plan, in.samples[static_cast<std::size_t>(i)])
                        .final;
            });
            dataset_save(Dataset(std::move(latents), "latents"), enc_out);
            if (!enc_report.empty())
                write_report(enc_report, {{"subcommand", "encode"},
                                          {"framework", enc_o.framework},
                                          {"denoiser", enc_den},
                                          {"n", std::to_string(enc_o.n)},
                                          {"seed", std::to_string(seed)},
                                          {"nfe", std::to_string(h.denoiser->nfe())}});
        } else if (c_train->parsed()) {
            Dataset data = dataset_load(tr_data);
            if (tr_framework == "vp") tr_cfg.framework = Framework::VP;
            else if (tr_framework == "ve") tr_cfg.framework = Framework::VE;
            else if (tr_framework == "iddpm") tr_cfg.framework = Framework::IDDPM;
            RngStream rng(seed, 0);
            MlpDenoiser net(parse_size_list(tr_widths), rng);
            auto records = train_loop(net, data, tr_cfg, rng);
            net.save(tr_out);
            if (!tr_loss_csv.empty()) {
                std::vector<std::string> lines{"step,loss"};
                for (const LossRecord& r : records)
                    lines.push_back(std::to_string(r.step) + "," + fmt(r.loss));
                write_lines(tr_loss_csv, lines);
            }
        } else if (c_lp->parsed()) {
            Dataset data = dataset_load(lp_data);
            DenoiserHandle h = make_denoiser(lp_den, lp_o, lp_sigma_data);
            std::vector<double> grid;
            if (!lp_sigmas.empty()) {
                grid = parse_double_list(lp_sigmas);
            } else {
                for (int i = 0; i < 20; ++i)
                    grid.push_back(0.01 * std::pow(10.0 / 0.01, i / 19.0));
            }
            RngStream rng(seed, 0);
            auto rows = loss_profile(*h.denoiser, lp_sigma_data, data, grid, lp_draws, rng);
            std::vector<std::string> lines{"sigma,loss"};
            for (const auto& [s, l] : rows) lines.push_back(fmt(s) + "," + fmt(l));
            write_lines(lp_out, lines);
        } else if (c_ag->parsed()) {
            Dataset in = dataset_load(ag_in);
            std::vector<Tensor> out(in.samples.size());
            std::vector<AugmentLabel> labels(in.samples.size());
            run_parallel(static_cast<int>(in.samples.size()), threads, [&](int i) {
                auto idx = static_cast<std::size_t>(i);
                RngStream rng(seed, static_cast<std::uint64_t>(i));
                AugmentParams p = draw_augment(rng, ag_c);
                out[idx] = apply_affine(in.samples[idx], augment_matrix(p, ag_c));
                labels[idx] = augment_label(p);
            });
            dataset_save(Dataset(std::move(out), "augmented"), ag_out);
            if (!ag_labels.empty()) {
                std::vector<std::string> lines{
                    "index,a0,a1,a2,cos_a3_m1,sin_a3,a5_cos_a4,a5_sin_a4,a6,a7"};
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    std::string row = std::to_string(i);
                    for (double v : labels[i]) row += "," + fmt(v);
                    lines.push_back(row);
                }
                write_lines(ag_labels, lines);
            }
        } else if (c_ts->parsed()) {
            DenoiserHandle h = make_denoiser(ts_den, ts_o, 0.5);
            Schedule sched = make_schedule(ts_o);
            StepPlan plan = make_plan(ts_o, ts_o.n);
            SamplerKind kind = ts_solver == "euler"  ? SamplerKind::Euler
                               : ts_solver == "heun" ? SamplerKind::Heun
                                                     : SamplerKind::Rk2;
            RngStream rng(seed, 0);
            ErrorCurve curve =
                truncation_scan(*h.denoiser, sched, plan, kind, ts_substeps, ts_trials, rng,
                                ts_alpha);
            write_curve(ts_out, "sigma", curve);
        } else if (c_ord->parsed()) {
            DenoiserHandle h = make_denoiser(ord_den, ord_o, 0.5);
            Schedule sched = make_schedule(ord_o);
            SamplerKind kind = ord_sampler == "euler"  ? SamplerKind::Euler
                               : ord_sampler == "heun" ? SamplerKind::Heun
                                                       : SamplerKind::Rk2;
            RngStream rng(seed, 0);
            ErrorCurve curve;
            double slope = convergence_order(
                *h.denoiser, sched, [&](int n) { return make_plan(ord_o, n); }, kind, ord_alpha,
                parse_int_list(ord_nlist), ord_trials, rng, &curve);
            std::vector<std::string> lines{"n,mean_rmse,std_rmse"};
            for (std::size_t i = 0; i < curve.abscissa.size(); ++i)
                lines.push_back(fmt(curve.abscissa[i]) + "," + fmt(curve.mean[i]) + "," +
                                fmt(curve.stddev[i]));
            lines.push_back("slope," + fmt(slope) + ",");
            write_lines(ord_out, lines);
            std::cout << "slope " << fmt(slope) << "\n";
        } else if (c_rt->parsed()) {
            DenoiserHandle h = make_denoiser(rt_den, rt_o, 0.5);
            Schedule sched = make_schedule(rt_o);
            Dataset data = dataset_load(rt_data);
            ErrorCurve curve = roundtrip_error(
                *h.denoiser, sched, [&](int n) { return make_plan(rt_o, n); },
                parse_int_list(rt_nlist), data, rt_trials);
            write_curve(rt_out, "n", curve);
        } else if (c_ch->parsed()) {
            FrameworkOpts o;
            DenoiserHandle h = make_denoiser(ch_den, o, 0.5);
            if (h.analytic == nullptr)
                throw CLI::ValidationError("--denoiser", "churn needs analytic:<dataset-path>");
            RngStream rng(seed, 0);
            ErrorCurve curve =
                churn_degradation(*h.analytic, ch_sigma, ch_iters, ch_s_noise, rng, ch_record);
            write_curve(ch_out, "iteration", curve);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t_start)
                  .count();
    std::cout << "done in " << ms << " ms\n";
    return 0;
}
