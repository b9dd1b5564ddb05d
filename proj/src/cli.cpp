#include "judgekit/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "judgekit/config.hpp"
#include "judgekit/stages.hpp"

namespace judgekit {

namespace {

struct CliArgs {
  std::string manifest;
  std::string config;
  bool dry_run = false;
  bool offline = false;
  std::uint64_t seed = 0;
  int concurrency = 0;
};

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"judgekit: manifest-driven judge corpus pipeline"};
  app.require_subcommand(1);
  CliArgs args;
  std::vector<CLI::Option*> seed_options;
  for (const std::string& stage : stage_names()) {
    CLI::App* sub = app.add_subcommand(stage, "run the " + stage + " stage");
    sub->add_option("--manifest", args.manifest, "stage manifest JSON")
        ->required();
    sub->add_option("--config", args.config,
                    "tool config JSON (overrides the manifest's)");
    sub->add_flag("--dry-run", args.dry_run, "print the plan, touch nothing");
    sub->add_flag("--offline", args.offline, "serve from cache only");
    seed_options.push_back(
        sub->add_option("--seed", args.seed, "override the manifest seed"));
    sub->add_option("--concurrency", args.concurrency,
                    "max in-flight backend requests");
  }

  // CLI11's required-subcommand error does not name the offending token.
  if (argc > 1 && argv[1][0] != '-') {
    const auto& names = stage_names();
    if (std::find(names.begin(), names.end(), argv[1]) == names.end()) {
      err << "unknown subcommand: " << argv[1]
          << "\nRun with --help for more information.\n";
      return 2;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  bool seed_given = false;
  for (const CLI::Option* option : seed_options) {
    if (option->count() > 0) seed_given = true;
  }

  try {
    RunManifest manifest = load_manifest(args.manifest);
    if (manifest.stage != stage) {
      err << "manifest stage is '" << manifest.stage
          << "' but the subcommand is '" << stage << "'\n";
      return 2;
    }
    ToolConfig config;
    std::filesystem::path config_file = args.config;
    if (config_file.empty() && !manifest.config_path.empty()) {
      config_file = manifest.config_path.is_absolute()
                        ? manifest.config_path
                        : manifest.base_dir / manifest.config_path;
    }
    if (!config_file.empty()) config = load_config(config_file);
    if (args.offline) config.offline = true;

    StageContext context;
    context.manifest = std::move(manifest);
    context.config = std::move(config);
    context.seed = seed_given ? args.seed : context.manifest.seed;
    context.concurrency = args.concurrency;
    context.dry_run = args.dry_run;
    context.out = &out;
    run_stage(context);
    return 0;
  } catch (const Error& error) {
    json payload{{"error",
                  {{"code", error_code_name(error.code())},
                   {"message", error.what()}}}};
    err << payload.dump(2) << "\n";
    return 1;
  } catch (const std::exception& error) {
    json payload{
        {"error", {{"code", "stage_error"}, {"message", error.what()}}}};
    err << payload.dump(2) << "\n";
    return 1;
  }
}

}  // namespace judgekit
