#include <filagauge/pipeline.hpp>
#include <filagauge/version.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"filagauge - camera-based filament diameter measurement pipeline"};
    app.set_version_flag("--version", filagauge::kVersion);
    app.require_subcommand(1);

    // measure
    filagauge::MeasureOptions measure;
    auto* cmd_measure = app.add_subcommand("measure", "process a frame directory");
    cmd_measure->add_option("--config", measure.config, "rig config JSON")->required();
    cmd_measure->add_option("--calibration", measure.calibration, "calibration JSON")->required();
    cmd_measure->add_option("--in", measure.input_dir, "frame directory")->required();
    cmd_measure->add_option("--out", measure.output_dir, "output directory")->required();
    cmd_measure->add_flag("--patches", measure.dump_patches, "dump pseudo-surface patches as PGM");
    cmd_measure->add_option("--workers", measure.workers, "worker thread count")
        ->default_val(1)
        ->check(CLI::PositiveNumber);

    // calibrate
    filagauge::CalibrateOptions calibrate;
    auto* cmd_calibrate = app.add_subcommand("calibrate", "fit the scale model from sample sets");
    cmd_calibrate->add_option("--config", calibrate.config, "rig config JSON")->required();
    cmd_calibrate
        ->add_option("--samples", calibrate.samples,
                     "JSON list of {dir, diameter_mm, distance_mm} sample sets")
        ->required();
    cmd_calibrate->add_option("--out", calibrate.output, "calibration JSON to write")->required();
    cmd_calibrate->add_option("--max-residual", calibrate.max_residual_mm_per_px,
                              "residual RMS gate, mm/px");

    // synth
    filagauge::SynthOptions synth;
    std::uint64_t synth_seed = 0;
    auto* cmd_synth = app.add_subcommand("synth", "render a synthetic frame sequence");
    cmd_synth->add_option("--scene", synth.scene, "scene JSON")->required();
    cmd_synth->add_option("--count", synth.count, "frame count")->required();
    cmd_synth->add_option("--out", synth.output_dir, "output directory")->required();
    auto* seed_opt = cmd_synth->add_option("--seed", synth_seed, "override the scene seed");
    cmd_synth->add_option("--format", synth.format, "frame format: pgm or png")
        ->check(CLI::IsMember({"pgm", "png"}));

    // spool
    double spool_r = 0.0, spool_d = 0.0;
    int spool_n = 0, spool_m = 0;
    double spool_feed = 0.0;
    auto* cmd_spool = app.add_subcommand("spool", "spool winding lengths and speed schedule");
    cmd_spool->add_option("R", spool_r, "spool radius, mm")->required();
    cmd_spool->add_option("n", spool_n, "diameters per spool width")->required();
    cmd_spool->add_option("m", spool_m, "layer count")->required();
    cmd_spool->add_option("d", spool_d, "filament diameter, mm")->required();
    auto* feed_opt = cmd_spool->add_option("--feed", spool_feed, "feed rate, mm/s");

    // report
    filagauge::ReportOptions report;
    std::string report_out;
    auto* cmd_report = app.add_subcommand("report", "summarize a measurement log CSV");
    cmd_report->add_option("--log", report.log_csv, "measurements CSV")->required();
    cmd_report->add_option("--nominal", report.nominal_mm, "nominal diameter, mm");
    cmd_report->add_option("--tolerance", report.tolerance_mm, "tolerance, mm");
    auto* report_out_opt =
        cmd_report->add_option("--out", report_out, "directory for histogram CSV/SVG");
    cmd_report->add_flag("--svg", report.write_svg, "also write SVG histograms");

    CLI11_PARSE(app, argc, argv);

    if (cmd_measure->parsed()) {
        return filagauge::run_measure(measure);
    }
    if (cmd_calibrate->parsed()) {
        return filagauge::run_calibrate(calibrate);
    }
    if (cmd_synth->parsed()) {
        if (seed_opt->count() > 0) {
            synth.seed = synth_seed;
        }
        return filagauge::run_synth(synth);
    }
    if (cmd_spool->parsed()) {
        std::optional<double> feed;
        if (feed_opt->count() > 0) {
            feed = spool_feed;
        }
        return filagauge::run_spool(spool_r, spool_n, spool_m, spool_d, feed, std::cout);
    }
    if (cmd_report->parsed()) {
        if (report_out_opt->count() > 0) {
            report.output_dir = report_out;
        }
        return filagauge::run_report(report, std::cout);
    }
    return filagauge::exit_code::config_error;
}
