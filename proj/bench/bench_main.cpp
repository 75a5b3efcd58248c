// Benchmark: serial reference vs OpenMP-parallel matcher and reachability
// closure on synthetic inputs. Run manually: build/bench/skillsentry_bench
// [artifacts] [lines] [values].
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "skillsentry/ingest.hpp"
#include "skillsentry/matcher.hpp"
#include "skillsentry/rules.hpp"
#include "skillsentry/sdg.hpp"
#include "skillsentry/util.hpp"

using namespace skillsentry;

#ifndef SKILLSENTRY_SEED_DATA_DIR
#define SKILLSENTRY_SEED_DATA_DIR "data"
#endif

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

SkillPackage synthetic_package(int artifacts, int lines, std::mt19937& rng) {
  std::vector<std::pair<std::string, std::string>> files;
  const char* sinks[] = {
      "subprocess.run(cmd, shell=True)",
      "os.system(\"uptime\")",
      "requests.post(url, data=payload)",
      "open(\"/tmp/f\", \"r\")",
      "os.getenv(\"HOME\")",
      "hashlib.sha256(data)",
      "x = y + 1",
      "print(\"working\")",
  };
  std::uniform_int_distribution<int> pick(0, 7);
  for (int a = 0; a < artifacts; ++a) {
    std::string body = "import os, subprocess, requests, hashlib\n";
    for (int l = 0; l < lines; ++l) body += std::string(sinks[pick(rng)]) + "\n";
    files.emplace_back("mod_" + std::to_string(a) + ".py", body);
  }
  return build_package("<bench>", std::move(files));
}

Sdg synthetic_graph(int values, std::mt19937& rng) {
  SkillPackage pkg = build_package("<bench>", {{"a.py", "x = 1\n"}});
  SdgInput in;
  in.pkg = &pkg;
  for (int i = 0; i < values; ++i) {
    ValueEntity v;
    v.value_id = short_id('v', "bench|" + std::to_string(i));
    v.text = "v" + std::to_string(i);
    v.origin_artifact = "a.py";
    in.values.push_back(v);
  }
  std::uniform_int_distribution<int> pick(0, values - 1);
  for (int i = 0; i < values * 4; ++i) {
    FlowFact f;
    f.from = in.values[static_cast<std::size_t>(pick(rng))].value_id;
    f.to = in.values[static_cast<std::size_t>(pick(rng))].value_id;
    if (f.from == f.to) continue;
    in.flows.push_back(f);
  }
  return build_sdg(in);
}

}  // namespace

int main(int argc, char** argv) {
  int artifacts = argc > 1 ? std::atoi(argv[1]) : 64;
  int lines = argc > 2 ? std::atoi(argv[2]) : 400;
  int values = argc > 3 ? std::atoi(argv[3]) : 1500;

#ifdef _OPENMP
  std::cout << "openmp threads: " << omp_get_max_threads() << "\n";
#else
  std::cout << "openmp: not enabled (serial build)\n";
#endif

  std::mt19937 rng(1);
  Taxonomy tax = Taxonomy::load(std::string(SKILLSENTRY_SEED_DATA_DIR) + "/taxonomy.txt");
  RuleBase rb = load_rule_base(std::string(SKILLSENTRY_SEED_DATA_DIR) + "/seed.rules", tax);
  SkillPackage pkg = synthetic_package(artifacts, lines, rng);

  auto t0 = std::chrono::steady_clock::now();
  auto serial = match_rules_serial(pkg, rb);
  double serial_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  auto parallel = match_rules(pkg, rb, {true});
  double parallel_ms = ms_since(t0);

  bool same = serial.size() == parallel.size();
  for (std::size_t i = 0; same && i < serial.size(); ++i)
    same = serial[i].record_id == parallel[i].record_id;

  std::cout << "match_rules  " << artifacts << " artifacts x " << lines << " lines: serial "
            << serial_ms << " ms, parallel " << parallel_ms << " ms, records " << serial.size()
            << ", outputs " << (same ? "identical" : "DIFFER") << "\n";

  Sdg g = synthetic_graph(values, rng);
  t0 = std::chrono::steady_clock::now();
  auto closure_serial = compute_reaches(g, false);
  double closure_serial_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  auto closure_parallel = compute_reaches(g, true);
  double closure_parallel_ms = ms_since(t0);

  std::cout << "reaches      " << values << " values: serial " << closure_serial_ms
            << " ms, parallel " << closure_parallel_ms << " ms, pairs " << closure_serial.size()
            << ", outputs " << (closure_serial == closure_parallel ? "identical" : "DIFFER")
            << "\n";
  return closure_serial == closure_parallel && same ? 0 : 1;
}
