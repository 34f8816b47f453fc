// gridlag command-line driver. Every command reads the artifacts of earlier
// stages from the work directory and writes its own next to them.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gridlag/ablation.hpp"
#include "gridlag/civil_time.hpp"
#include "gridlag/errors.hpp"
#include "gridlag/frame_archive.hpp"
#include "gridlag/geo.hpp"
#include "gridlag/geojson.hpp"
#include "gridlag/heatmap.hpp"
#include "gridlag/ingest.hpp"
#include "gridlag/lagrank.hpp"
#include "gridlag/mask.hpp"
#include "gridlag/parallel.hpp"
#include "gridlag/predict.hpp"
#include "gridlag/raster.hpp"
#include "gridlag/split.hpp"
#include "gridlag/synth.hpp"

namespace fs = std::filesystem;
using namespace gridlag;

namespace {

/// An input produced by an earlier command is absent.
class MissingArtifact : public DataError {
public:
    MissingArtifact(const fs::path& path, std::string_view command)
        : DataError(fmt::format("missing {}; run `gridlag {}` first", path.string(), command)) {}
};

struct Workspace {
    fs::path dir = "gridlag_run";

    fs::path trips() const { return dir / "trips.csv"; }
    fs::path tracts() const { return dir / "tracts.geojson"; }
    fs::path boundary() const { return dir / "boundary.geojson"; }
    fs::path located() const { return dir / "located.csv"; }
    fs::path frames() const { return dir / "frames"; }
    fs::path mask_png() const { return dir / "mask.png"; }
    fs::path split_csv(split::Horizon h) const { return dir / fmt::format("split_{}.csv", split::to_string(h)); }
    fs::path ranking_csv(split::Horizon h) const {
        return dir / fmt::format("ranking_{}.csv", split::to_string(h));
    }
    fs::path file(const std::string& name) const { return dir / name; }
};

void require(const fs::path& path, std::string_view command) {
    if (!fs::exists(path)) throw MissingArtifact(path, command);
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
    return out;
}

/// Writes a text report to a file and echoes it to stdout.
template <class Fn>
void report(const fs::path& path, Fn&& fn) {
    std::ostringstream text;
    fn(text);
    open_out(path) << text.str();
    std::cout << text.str();
}

Days parse_day_or_throw(const std::string& text, std::string_view what) {
    auto d = parse_date(text);
    if (!d) throw ConfigError(fmt::format("{} '{}' is not a date (YYYY-MM-DD)", what, text));
    return *d;
}

std::vector<int> parse_lag_list(const std::string& text) {
    std::vector<int> lags;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            lags.push_back(v);
        } catch (const std::logic_error&) {
            throw ConfigError(fmt::format("bad lag '{}'", item));
        }
    }
    if (lags.empty()) throw ConfigError("empty lag list");
    return lags;
}

// ---------------------------------------------------------------------------
// Loaders shared by the later stages

archive::Archive load_archive(const Workspace& ws) {
    require(ws.frames() / "manifest.csv", "rasterize");
    return archive::open_archive(ws.frames());
}

mask::ActivityMask load_mask(const Workspace& ws) {
    require(ws.mask_png(), "mask");
    return mask::read_mask_png(ws.mask_png());
}

split::SplitAssignment load_split(const Workspace& ws, split::Horizon h) {
    const auto path = ws.split_csv(h);
    require(path, fmt::format("split --horizon {}", split::to_string(h)));
    auto in = open_in(path);
    return split::read_split_csv(in, h);
}

lagrank::LagRanking load_ranking(const Workspace& ws, split::Horizon h) {
    const auto path = ws.ranking_csv(h);
    require(path, fmt::format("rank-lags --horizon {}", split::to_string(h)));
    auto in = open_in(path);
    return lagrank::read_ranking_csv(in);
}

struct Loaded {
    archive::Archive archive;
    mask::ActivityMask mask;
    mask::MaskedSeries series;
};

Loaded load_series(const Workspace& ws) {
    auto a = load_archive(ws);
    auto m = load_mask(ws);
    if (!m.grid.same_shape(a.grid.grid.rows, a.grid.grid.cols))
        throw DataError("mask shape does not match the frame grid; rerun `gridlag mask`");
    auto s = archive::load_masked_series(a, m);
    return {std::move(a), std::move(m), std::move(s)};
}

// ---------------------------------------------------------------------------
// Command options

struct SynthOpts {
    synth::SynthConfig cfg;
    std::string start = "2019-01-01";
    std::string dst = "us";
};

struct IngestOpts {
    std::string trips, tracts, boundary, centroids;
    std::string geoid_key = "GEOID";
    std::string boundary_mode = "centroid";
    ingest::FilterConfig filter;
    int utm_zone = 14;
};

struct RasterOpts {
    double cell_w = 240.0, cell_h = 220.0;
    std::string start, end;
    std::string dst = "us";
};

struct MaskOpts {
    bool train_only = false;
    std::string horizon = "next-hour";
};

struct SplitOpts {
    std::string horizon = "next-hour";
    split::SplitSpec spec;
    bool exclude_missing = false;
};

struct RankOpts {
    std::string horizon = "next-hour";
    int max_lag = 504;
    std::vector<std::string> metrics{"same_corr", "cross_corr", "same_mae"};
};

struct ModelOpts {
    std::string horizon = "next-hour";
    std::string model = "linear";
    double lambda = 1e-3;
    std::string norm = "training";
    double alpha = 0.05;
};

struct CompareOpts {
    ModelOpts model;
    std::vector<std::string> presets;
    std::size_t depth = 0;
    std::string subset = "test";
    bool list = false;
};

struct AblateOpts {
    ModelOpts model;
    std::size_t n_max = 0;
    std::size_t n_min = 1;
    double margin = 0.02;
};

struct EvalOpts {
    ModelOpts model;
    std::string preset;
    std::string lags;
    std::size_t depth = 0;
    std::string subset = "test";
    std::string label;
};

struct PlotOpts {
    std::string frame;  // "YYYY-MM-DD HH"
    std::int64_t hour_index = -1;
    std::string channel = "pickup";
    bool mask = false;
    std::string scale = "sqrt";
    double vmax = 0.0;
    std::size_t zoom = 1;
    std::string out;
};

std::unique_ptr<predict::Trainer> make_trainer(const ModelOpts& o) {
    if (o.model == "linear") {
        predict::NormScope scope;
        if (o.norm == "training") scope = predict::NormScope::training;
        else if (o.norm == "full") scope = predict::NormScope::full;
        else throw ConfigError(fmt::format("unknown norm scope '{}' (expected training or full)", o.norm));
        if (!(o.lambda >= 0.0)) throw ConfigError("ridge lambda must be nonnegative");
        return std::make_unique<predict::LinearTrainer>(o.lambda, scope);
    }
    if (o.model == "persistence") return std::make_unique<predict::PersistenceTrainer>();
    throw ConfigError(fmt::format("unknown model '{}' (expected linear or persistence)", o.model));
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// Commands

void run_synth(const Workspace& ws, SynthOpts o) {
    o.cfg.start = parse_day_or_throw(o.start, "start");
    o.cfg.dst = parse_dst_rule(o.dst);
    const auto data = synth::generate(o.cfg);
    fs::create_directories(ws.dir);
    {
        auto out = open_out(ws.trips());
        synth::write_trips_csv(out, data);
    }
    {
        auto out = open_out(ws.tracts());
        synth::write_tracts_geojson(out, data);
    }
    {
        auto out = open_out(ws.boundary());
        synth::write_boundary_geojson(out, data);
    }
    fmt::print("synth: {} trips over {} hours and {} tracts -> {}\n", data.trips.size(), data.hours,
               data.tracts.size(), ws.dir.string());
}

void run_ingest(const Workspace& ws, const IngestOpts& o) {
    o.filter.validate();
    const fs::path trips = o.trips.empty() ? ws.trips() : fs::path(o.trips);
    const fs::path tracts = o.tracts.empty() ? ws.tracts() : fs::path(o.tracts);
    const fs::path boundary = o.boundary.empty() ? ws.boundary() : fs::path(o.boundary);
    require(trips, "synth (or pass --trips)");

    geo::ProjectionSpec proj;
    proj.utm_zone = o.utm_zone;
    proj.validate();
    const auto mode = geo::parse_boundary_mode(o.boundary_mode);

    std::vector<geo::TractPolygon> polygons;
    if (fs::exists(tracts)) {
        auto in = open_in(tracts);
        polygons = geojson::read_polygons(in, o.geoid_key);
    }
    geo::CentroidTable table;
    if (!o.centroids.empty()) {
        auto in = open_in(o.centroids);
        table = geo::read_centroid_csv(in, proj);
    } else {
        require(tracts, "synth (or pass --tracts / --centroids)");
        table = geo::build_centroid_table(polygons, proj);
    }
    std::vector<geo::TractPolygon> area;
    if (fs::exists(boundary)) {
        auto in = open_in(boundary);
        area = geojson::read_polygons(in, "NAME");
    } else if (!o.boundary.empty()) {
        throw DataError(fmt::format("boundary file {} not found", boundary.string()));
    }

    auto in = open_in(trips);
    const ingest::ColumnMap schema;
    const auto parsed = ingest::parse_trips(in, schema);
    auto filtered = ingest::filter_trips(parsed, o.filter);
    const auto located = geo::geolocate_trips(filtered.kept, table, area, mode, polygons);
    geo::apply_to_report(filtered.report, located);
    std::vector<ingest::TripRecord> kept;
    kept.reserve(located.kept_indices.size());
    for (auto i : located.kept_indices) kept.push_back(filtered.kept[i]);
    filtered.report.summary.reset();
    if (!kept.empty()) filtered.report.summary = ingest::trip_summary(kept);

    {
        auto out = open_out(ws.located());
        geo::write_located_csv(out, parsed.header, filtered.kept, located);
    }
    {
        auto out = open_out(ws.file("centroids.csv"));
        geo::write_centroid_csv(out, table);
    }
    {
        auto out = open_out(ws.file("filter_report.csv"));
        ingest::write_report_csv(out, filtered.report);
    }
    report(ws.file("filter_report.txt"), [&](std::ostream& out) {
        ingest::write_report_text(out, filtered.report);
        for (const auto& w : table.warnings) out << fmt::format("warning: tract {}: {}\n", w.geoid, w.message);
    });
}

void run_rasterize(const Workspace& ws, const RasterOpts& o) {
    require(ws.located(), "ingest");
    auto in = open_in(ws.located());
    const auto trips = geo::read_located_csv(in, ingest::ColumnMap{});
    if (trips.empty()) throw DataError("no located trips to rasterize");
    const auto rule = parse_dst_rule(o.dst);

    Days first = trips.front().start.day, last = first;
    for (const auto& t : trips) {
        first = std::min(first, t.start.day);
        last = std::max(last, t.start.day);
    }
    if (!o.start.empty()) first = parse_day_or_throw(o.start, "start");
    if (!o.end.empty()) last = parse_day_or_throw(o.end, "end");
    if (last < first) throw ConfigError("end date precedes start date");
    const auto range = DayRange::inclusive(first, last);

    const auto grid = raster::build_grid(trips, o.cell_w, o.cell_h);
    raster::RasterTally tally;
    fs::create_directories(ws.frames());
    archive::ArchiveWriter writer(ws.frames(), {grid, range});
    std::uint64_t pickups = 0, dropoffs = 0;
    raster::rasterize_range(trips, grid, range, rule, [&](std::int64_t h, const raster::DemandFrame& f) {
        pickups += raster::total(f.pickup);
        dropoffs += raster::total(f.dropoff);
        writer.add(h, f);
    }, &tally);
    writer.finish();

    report(ws.file("raster_report.txt"), [&](std::ostream& out) {
        out << fmt::format("grid: {} rows x {} cols, cell {} x {} m, origin ({:.3f}, {:.3f})\n", grid.rows,
                           grid.cols, grid.cell_w, grid.cell_h, grid.origin_x, grid.origin_y);
        out << fmt::format("range: {} .. {} ({} hourly frames per channel)\n", format_date(range.first),
                           format_date(last), range.hours());
        out << fmt::format("counted: {} pick-ups, {} drop-offs\n", pickups, dropoffs);
        out << fmt::format("dropped pick-ups: {} outside grid, {} outside range, {} in skipped clock hours\n",
                           tally.pickup_out_of_grid, tally.pickup_out_of_range, tally.pickup_in_missing_hour);
        out << fmt::format("dropped drop-offs: {} outside grid, {} outside range, {} in skipped clock hours\n",
                           tally.dropoff_out_of_grid, tally.dropoff_out_of_range, tally.dropoff_in_missing_hour);
    });
}

void run_mask(const Workspace& ws, const MaskOpts& o) {
    const auto a = load_archive(ws);
    std::optional<mask::HourWindow> window;
    if (o.train_only) {
        const auto h = split::parse_horizon(o.horizon);
        const auto s = load_split(ws, h);
        const auto last = s.last_target(split::Subset::train);
        if (!last) throw DataError("the split has no training samples");
        window = mask::HourWindow{0, *last + 1};
    }
    const auto m = archive::build_mask(a, window);
    mask::write_mask_png(ws.mask_png(), m);
    {
        auto out = open_out(ws.file("omega.csv"));
        mask::write_omega_csv(out, m);
    }
    report(ws.file("mask_report.txt"), [&](std::ostream& out) {
        const auto cells = m.rows() * m.cols();
        out << fmt::format("mask: {} of {} cells active ({:.2f}%), built from {} frames\n", m.active_count(),
                           cells, cells ? 100.0 * static_cast<double>(m.active_count()) / cells : 0.0,
                           window ? "training" : "all");
    });
}

void run_split(const Workspace& ws, const SplitOpts& o) {
    o.spec.validate();
    const auto h = split::parse_horizon(o.horizon);
    const auto a = load_archive(ws);
    const auto hours = a.grid.range.hours();
    const auto candidates = split::enumerate_samples(hours, o.spec.lookback, h);
    auto s = split::split_samples(candidates, o.spec);
    if (o.exclude_missing) {
        std::vector<std::uint8_t> missing(a.entries.size());
        for (std::size_t i = 0; i < missing.size(); ++i) missing[i] = a.entries[i].missing ? 1 : 0;
        split::exclude_missing_windows(s, missing, o.spec.lookback);
    }
    const auto leak = split::verify_no_leakage(s, o.spec.lookback);
    if (!leak.pass) throw DataError("split failed the leakage check");
    {
        auto out = open_out(ws.split_csv(h));
        split::write_split_csv(out, s, a.grid.range);
    }
    report(ws.file(fmt::format("split_{}.txt", split::to_string(h))), [&](std::ostream& out) {
        out << fmt::format("horizon {}: {} candidates of {} hours, lookback {}\n", split::to_string(h),
                           candidates.size(), hours, o.spec.lookback);
        for (auto sub : split::kSubsets) {
            const auto& v = s[sub];
            if (v.empty()) {
                out << fmt::format("  {:<5} 0 samples\n", split::to_string(sub));
                continue;
            }
            out << fmt::format("  {:<5} {} samples, targets {} .. {}\n", split::to_string(sub), v.size(),
                               v.front().target, v.back().target);
        }
        out << fmt::format("  gaps between subsets: {}\n", fmt::join(leak.gaps, ", "));
    });
}

void run_rank(const Workspace& ws, const RankOpts& o) {
    const auto h = split::parse_horizon(o.horizon);
    std::vector<lagrank::Metric> metrics;
    for (const auto& name : o.metrics) metrics.push_back(lagrank::parse_metric(name));
    if (metrics.empty()) throw ConfigError("at least one ranking metric is required");
    const auto s = load_split(ws, h);
    const auto train = s.targets(split::Subset::train);
    if (train.empty()) throw DataError("the split has no training samples");
    if (o.max_lag < split::min_lag(h)) throw ConfigError("max lag is below the smallest admissible lag");
    if (o.max_lag > train.front())
        throw ConfigError(fmt::format("max lag {} exceeds the first training target {}", o.max_lag, train.front()));
    const auto data = load_series(ws);
    const auto lags = lagrank::lag_universe(split::min_lag(h), o.max_lag);
    const auto rows = lagrank::lag_metrics(data.series, train, lags);
    const auto ranking = lagrank::rank_lags(rows, metrics);
    {
        auto out = open_out(ws.ranking_csv(h));
        lagrank::write_ranking_csv(out, ranking);
    }
    report(ws.file(fmt::format("ranking_{}.txt", split::to_string(h))), [&](std::ostream& out) {
        out << fmt::format("horizon {}: {} lags ranked over {} training targets\n", split::to_string(h),
                           lags.size(), train.size());
        const auto order = ranking.ordered_lags();
        out << fmt::format("top lags: {}\n",
                           fmt::join(order.begin(), order.begin() + std::min<std::ptrdiff_t>(18, std::ssize(order)),
                                     ", "));
    });
}

std::vector<std::int64_t> subset_targets(const split::SplitAssignment& s, const std::string& name) {
    const auto sub = split::parse_subset(name);
    auto t = s.targets(sub);
    if (t.empty()) throw DataError(fmt::format("the split has no {} samples", name));
    return t;
}

void run_compare(const Workspace& ws, CompareOpts o) {
    const auto h = split::parse_horizon(o.model.horizon);
    if (o.presets.empty()) o.presets = {"proposed", "recent-adjacent", "fixed-period"};
    const std::size_t n = o.depth ? o.depth : ablation::default_depth(h);

    std::optional<lagrank::LagRanking> ranking;
    std::vector<ablation::NamedLags> configs;
    for (const auto& name : o.presets) {
        const auto p = ablation::parse_preset(name);
        if (p == ablation::Preset::proposed && !ranking) ranking = load_ranking(ws, h);
        configs.push_back({std::string(ablation::to_string(p)),
                           ablation::preset_lags(p, h, n, ranking ? &*ranking : nullptr)});
    }
    for (const auto& c : configs)
        fmt::print("{} ({}): {{{}}}\n", c.name, split::to_string(h), fmt::join(c.lags, ", "));
    if (o.list) return;

    check_alpha(o.model.alpha);
    const auto trainer = make_trainer(o.model);
    const auto s = load_split(ws, h);
    const auto data = load_series(ws);
    ablation::RunContext ctx{&data.series, trainer.get(), s.targets(split::Subset::train),
                             subset_targets(s, o.subset)};
    ctx.alpha = o.model.alpha;
    if (ctx.train.empty()) throw DataError("the split has no training samples");
    if (configs.size() < 2) {
        const auto model = trainer->fit(data.series, ctx.train, configs.front().lags);
        const auto e = predict::evaluate(*model, ctx.eval, data.series);
        auto out = open_out(ws.file(fmt::format("comparison_{}.csv", split::to_string(h))));
        predict::write_summary_csv(out, configs.front().name, e.mean);
        predict::write_summary_csv(std::cout, configs.front().name, e.mean);
        return;
    }
    const auto c = ablation::compare_configs(configs, ctx);
    {
        auto out = open_out(ws.file(fmt::format("comparison_{}.csv", split::to_string(h))));
        ablation::write_comparison_csv(out, c);
    }
    report(ws.file(fmt::format("comparison_{}.txt", split::to_string(h))),
           [&](std::ostream& out) { ablation::write_comparison_text(out, c); });
}

void run_ablate(const Workspace& ws, const AblateOpts& o) {
    const auto h = split::parse_horizon(o.model.horizon);
    check_alpha(o.model.alpha);
    if (!(o.margin > 0.0)) throw ConfigError("margin fraction must be positive");
    const std::size_t n_max = o.n_max ? o.n_max : ablation::default_depth(h) + 6;
    const auto trainer = make_trainer(o.model);
    const auto ranking = load_ranking(ws, h);
    const auto s = load_split(ws, h);
    const auto data = load_series(ws);
    ablation::RunContext ctx{&data.series, trainer.get(), s.targets(split::Subset::train),
                             subset_targets(s, "val")};
    ctx.alpha = o.model.alpha;
    const auto a = ablation::ablate_depth(ranking, n_max, ctx, o.margin, o.n_min);
    {
        auto out = open_out(ws.file(fmt::format("ablation_{}.csv", split::to_string(h))));
        ablation::write_ablation_csv(out, a);
    }
    report(ws.file(fmt::format("ablation_{}.txt", split::to_string(h))),
           [&](std::ostream& out) { ablation::write_ablation_text(out, a); });
}

void run_evaluate(const Workspace& ws, const EvalOpts& o) {
    const auto h = split::parse_horizon(o.model.horizon);
    std::vector<int> lags;
    std::string label = o.label;
    if (!o.lags.empty() && !o.preset.empty()) throw ConfigError("pass either --lags or --preset, not both");
    if (!o.lags.empty()) {
        lags = parse_lag_list(o.lags);
        for (int lag : lags)
            if (lag < split::min_lag(h))
                throw ConfigError(fmt::format("lag {} is not admissible for the {} horizon", lag, split::to_string(h)));
        if (label.empty()) label = "custom";
    } else {
        const auto p = ablation::parse_preset(o.preset.empty() ? "proposed" : o.preset);
        std::optional<lagrank::LagRanking> ranking;
        if (p == ablation::Preset::proposed) ranking = load_ranking(ws, h);
        lags = ablation::preset_lags(p, h, o.depth ? o.depth : ablation::default_depth(h),
                                     ranking ? &*ranking : nullptr);
        if (label.empty()) label = std::string(ablation::to_string(p));
    }
    const auto s = load_split(ws, h);
    const auto train = s.targets(split::Subset::train);
    const auto eval = subset_targets(s, o.subset);
    const auto data = load_series(ws);

    std::optional<predict::PredictorModel> model;
    if (o.model.model == "persistence") {
        model = predict::PredictorModel::persistence(lags, lags.front());
    } else {
        // Validates the options the same way the comparison commands do.
        (void)make_trainer(o.model);
        if (train.empty()) throw DataError("the split has no training samples");
        const auto scope = o.model.norm == "full" ? predict::NormScope::full : predict::NormScope::training;
        const double norm = predict::norm_factor_for(data.series, train, lags, scope);
        model = predict::fit_linear(data.series, train, lags, o.model.lambda, norm);
    }
    const auto e = predict::evaluate(*model, eval, data.series);
    const auto stem = fmt::format("{}_{}", label, split::to_string(h));
    {
        auto out = open_out(ws.file(fmt::format("model_{}.csv", stem)));
        predict::write_model_csv(out, *model);
    }
    {
        auto out = open_out(ws.file(fmt::format("samples_{}.csv", stem)));
        predict::write_samples_csv(out, e);
    }
    {
        auto out = open_out(ws.file(fmt::format("summary_{}.csv", stem)));
        predict::write_summary_csv(out, label, e.mean);
    }
    fmt::print("{} ({}, {} model, {} {} samples): MSE {:.5f}  MAE {:.5f}  MaxAE {:.5f}  R2 {:.5f}\n", label,
               split::to_string(h), o.model.model, e.samples.size(), o.subset, e.mean.mse, e.mean.mae,
               e.mean.max_ae, e.mean.r2);
}

void run_plot(const Workspace& ws, const PlotOpts& o) {
    const auto scale = heatmap::parse_scale(o.scale);
    fs::path out = o.out;
    png::RgbImage img;
    double vmax = o.vmax;
    if (o.mask) {
        img = heatmap::render_mask(load_mask(ws));
        if (out.empty()) out = ws.file("plots/mask.png");
    } else {
        const auto a = load_archive(ws);
        std::int64_t h = o.hour_index;
        if (!o.frame.empty()) {
            auto t = parse_timestamp(o.frame.size() <= 13 ? o.frame + ":00" : o.frame);
            if (!t) throw ConfigError(fmt::format("frame '{}' is not 'YYYY-MM-DD HH'", o.frame));
            h = a.grid.range.hour_index(*t);
            if (h < 0) throw ConfigError(fmt::format("frame '{}' lies outside the archive range", o.frame));
        }
        if (h < 0) throw ConfigError("pass --frame, --hour-index or --mask");
        if (h >= a.grid.range.hours()) throw ConfigError(fmt::format("hour index {} outside the archive", h));
        archive::Channel ch;
        if (o.channel == "pickup") ch = archive::Channel::pickup;
        else if (o.channel == "dropoff") ch = archive::Channel::dropoff;
        else throw ConfigError(fmt::format("unknown channel '{}' (expected pickup or dropoff)", o.channel));
        const auto frame = archive::load_frame(a, h);
        const auto& counts = ch == archive::Channel::pickup ? frame.pickup : frame.dropoff;
        if (vmax <= 0.0) {
            std::uint32_t m = 0;
            for (auto v : counts.values()) m = std::max(m, v);
            vmax = m;
        }
        std::optional<mask::ActivityMask> m;
        if (fs::exists(ws.mask_png())) m = mask::read_mask_png(ws.mask_png());
        img = heatmap::render(counts, scale, vmax, m ? &*m : nullptr);
        if (out.empty())
            out = ws.file("plots") / archive::frame_filename(ch, frame.day, frame.hour);
    }
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    png::write_rgb8(out, heatmap::upscale(img, o.zoom));
    auto legend_path = out;
    legend_path.replace_extension(".legend.csv");
    {
        auto legend = open_out(legend_path);
        if (o.mask) legend << "level,value,r,g,b\n0,0,0,0,0\n1,1,255,255,255\n";
        else heatmap::write_legend_csv(legend, scale, vmax);
    }
    fmt::print("plot: {} (legend {})\n", out.string(), legend_path.string());
}

void add_model_options(CLI::App* cmd, ModelOpts& m) {
    cmd->add_option("--horizon", m.horizon, "next-hour or next-24h")->capture_default_str();
    cmd->add_option("--model", m.model, "linear or persistence")->capture_default_str();
    cmd->add_option("--lambda", m.lambda, "ridge penalty of the linear model")->capture_default_str();
    cmd->add_option("--norm", m.norm, "input scaling scope: training or full")->capture_default_str();
    cmd->add_option("--alpha", m.alpha, "significance level")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridlag: trip records to hourly demand grids, lag ranking and configuration tests"};
    app.set_config("--config", "", "INI/TOML file; sections name the commands");
    app.require_subcommand(1);
    Workspace ws;
    std::string work = ws.dir.string();
    unsigned threads = 0;
    app.add_option("-w,--work", work, "work directory holding all artifacts")->capture_default_str();
    app.add_option("--threads", threads, "worker thread cap (0 = all cores)")->capture_default_str();

    SynthOpts synth_o;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic trips, tracts and boundary");
    synth_cmd->add_option("--seed", synth_o.cfg.seed)->capture_default_str();
    synth_cmd->add_option("--weeks", synth_o.cfg.weeks)->capture_default_str();
    synth_cmd->add_option("--start", synth_o.start, "first day (YYYY-MM-DD)")->capture_default_str();
    synth_cmd->add_option("--dst", synth_o.dst, "skipped-hour rule: us or none")->capture_default_str();
    synth_cmd->add_option("--tract-rows", synth_o.cfg.tract_rows)->capture_default_str();
    synth_cmd->add_option("--tract-cols", synth_o.cfg.tract_cols)->capture_default_str();
    synth_cmd->add_option("--base-rate", synth_o.cfg.base_rate, "trips per tract-hour")->capture_default_str();
    synth_cmd->add_option("--daily-amp", synth_o.cfg.daily_amp)->capture_default_str();
    synth_cmd->add_option("--weekly-amp", synth_o.cfg.weekly_amp)->capture_default_str();
    synth_cmd->add_option("--phase-spread", synth_o.cfg.phase_spread, "radians")->capture_default_str();
    synth_cmd->add_option("--weight-spread", synth_o.cfg.weight_spread)->capture_default_str();
    synth_cmd->add_option("--drift-sd", synth_o.cfg.drift_sd)->capture_default_str();
    synth_cmd->add_option("--drift-persistence", synth_o.cfg.drift_persistence)->capture_default_str();

    IngestOpts ingest_o;
    auto* ingest_cmd = app.add_subcommand("ingest", "filter trips and attach tract coordinates");
    ingest_cmd->add_option("--trips", ingest_o.trips, "trip CSV (default: <work>/trips.csv)");
    ingest_cmd->add_option("--tracts", ingest_o.tracts, "tract GeoJSON (default: <work>/tracts.geojson)");
    ingest_cmd->add_option("--boundary", ingest_o.boundary, "boundary GeoJSON (default: <work>/boundary.geojson)");
    ingest_cmd->add_option("--centroids", ingest_o.centroids, "precomputed geoid,lon,lat table");
    ingest_cmd->add_option("--geoid-key", ingest_o.geoid_key)->capture_default_str();
    ingest_cmd->add_option("--boundary-mode", ingest_o.boundary_mode, "centroid or any_vertex")->capture_default_str();
    ingest_cmd->add_option("--mode", ingest_o.filter.mode, "vehicle type kept")->capture_default_str();
    ingest_cmd->add_option("--year", ingest_o.filter.year)->capture_default_str();
    ingest_cmd->add_option("--min-duration", ingest_o.filter.duration.min, "minutes")->capture_default_str();
    ingest_cmd->add_option("--max-duration", ingest_o.filter.duration.max, "minutes")->capture_default_str();
    ingest_cmd->add_option("--min-distance", ingest_o.filter.distance.min, "km")->capture_default_str();
    ingest_cmd->add_option("--max-distance", ingest_o.filter.distance.max, "km")->capture_default_str();
    ingest_cmd->add_option("--min-speed", ingest_o.filter.speed.min, "km/h")->capture_default_str();
    ingest_cmd->add_option("--max-speed", ingest_o.filter.speed.max, "km/h")->capture_default_str();
    ingest_cmd->add_option("--utm-zone", ingest_o.utm_zone)->capture_default_str();

    RasterOpts raster_o;
    auto* raster_cmd = app.add_subcommand("rasterize", "count trips into hourly pick-up/drop-off frames");
    raster_cmd->add_option("--cell-width", raster_o.cell_w, "m")->capture_default_str();
    raster_cmd->add_option("--cell-height", raster_o.cell_h, "m")->capture_default_str();
    raster_cmd->add_option("--start", raster_o.start, "first day (default: first trip)");
    raster_cmd->add_option("--end", raster_o.end, "last day, inclusive (default: last trip)");
    raster_cmd->add_option("--dst", raster_o.dst, "skipped-hour rule: us or none")->capture_default_str();

    MaskOpts mask_o;
    auto* mask_cmd = app.add_subcommand("mask", "build the activity mask");
    mask_cmd->add_flag("--train-only", mask_o.train_only, "use only frames up to the last training target");
    mask_cmd->add_option("--horizon", mask_o.horizon, "split used by --train-only")->capture_default_str();

    SplitOpts split_o;
    auto* split_cmd = app.add_subcommand("split", "chronological train/val/test split with leakage buffers");
    split_cmd->add_option("--horizon", split_o.horizon)->capture_default_str();
    split_cmd->add_option("--lookback", split_o.spec.lookback, "largest lag, hours")->capture_default_str();
    split_cmd->add_option("--buffer", split_o.spec.buffer)->capture_default_str();
    split_cmd->add_option("--fractions", split_o.spec.fractions, "train val test");
    split_cmd->add_flag("--exclude-missing", split_o.exclude_missing, "drop samples whose window has a skipped hour");

    RankOpts rank_o;
    auto* rank_cmd = app.add_subcommand("rank-lags", "rank candidate lags on the training targets");
    rank_cmd->add_option("--horizon", rank_o.horizon)->capture_default_str();
    rank_cmd->add_option("--max-lag", rank_o.max_lag)->capture_default_str();
    rank_cmd->add_option("--metrics", rank_o.metrics, "same_corr cross_corr same_mae abs_diff")
        ->capture_default_str();

    CompareOpts compare_o;
    auto* compare_cmd = app.add_subcommand("compare", "pairwise tests between lag configurations");
    add_model_options(compare_cmd, compare_o.model);
    compare_cmd->add_option("--preset", compare_o.presets, "proposed, recent-adjacent, fixed-period (repeatable)");
    compare_cmd->add_option("--depth", compare_o.depth, "lags per demand type (default per horizon)");
    compare_cmd->add_option("--subset", compare_o.subset, "val or test")->capture_default_str();
    compare_cmd->add_flag("--list", compare_o.list, "print the lag sets and stop");

    AblateOpts ablate_o;
    auto* ablate_cmd = app.add_subcommand("ablate", "depth ablation with non-inferiority tests");
    add_model_options(ablate_cmd, ablate_o.model);
    ablate_cmd->add_option("--n-max", ablate_o.n_max, "deepest lags per type (default: horizon depth + 6)");
    ablate_cmd->add_option("--n-min", ablate_o.n_min)->capture_default_str();
    ablate_cmd->add_option("--margin", ablate_o.margin, "non-inferiority margin fraction")->capture_default_str();

    EvalOpts eval_o;
    auto* eval_cmd = app.add_subcommand("evaluate", "fit one configuration and report masked metrics");
    add_model_options(eval_cmd, eval_o.model);
    eval_cmd->add_option("--preset", eval_o.preset, "lag preset (default proposed)");
    eval_cmd->add_option("--lags", eval_o.lags, "explicit comma-separated lags");
    eval_cmd->add_option("--depth", eval_o.depth, "lags per demand type for presets");
    eval_cmd->add_option("--subset", eval_o.subset, "val or test")->capture_default_str();
    eval_cmd->add_option("--label", eval_o.label, "output name stem");

    PlotOpts plot_o;
    auto* plot_cmd = app.add_subcommand("plot", "render a frame or the mask as a PNG heatmap");
    plot_cmd->add_option("--frame", plot_o.frame, "'YYYY-MM-DD HH'");
    plot_cmd->add_option("--hour-index", plot_o.hour_index);
    plot_cmd->add_option("--channel", plot_o.channel, "pickup or dropoff")->capture_default_str();
    plot_cmd->add_flag("--mask", plot_o.mask, "render the activity mask");
    plot_cmd->add_option("--scale", plot_o.scale, "linear, sqrt or log")->capture_default_str();
    plot_cmd->add_option("--vmax", plot_o.vmax, "value mapped to the brightest color (default: frame max)");
    plot_cmd->add_option("--zoom", plot_o.zoom, "pixels per grid cell")->capture_default_str();
    plot_cmd->add_option("-o,--out", plot_o.out, "output PNG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ws.dir = work;
        thread_cap().store(threads);
        if (*synth_cmd) run_synth(ws, synth_o);
        else if (*ingest_cmd) run_ingest(ws, ingest_o);
        else if (*raster_cmd) run_rasterize(ws, raster_o);
        else if (*mask_cmd) run_mask(ws, mask_o);
        else if (*split_cmd) run_split(ws, split_o);
        else if (*rank_cmd) run_rank(ws, rank_o);
        else if (*compare_cmd) run_compare(ws, compare_o);
        else if (*ablate_cmd) run_ablate(ws, ablate_o);
        else if (*eval_cmd) run_evaluate(ws, eval_o);
        else if (*plot_cmd) run_plot(ws, plot_o);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return 2;
    } catch (const DataError& e) {
        fmt::print(stderr, "data error: {}\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
