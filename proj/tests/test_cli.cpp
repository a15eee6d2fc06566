#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const std::string command = std::string(VJMSTIFF_BIN) + " " + args + " 2>&1";
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buffer;
  while (fgets(buffer.data(), buffer.size(), pipe) != nullptr)
    result.output += buffer.data();
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string data_file(const std::string& name) {
  return std::string(VJMSTIFF_DATA_DIR) + "/" + name;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "vjmstiff-cli-test";
  fs::create_directories(dir);
  return dir;
}

size_t count_lines(const std::string& text) {
  size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("validate reports coordinate counts and the spectrum") {
  const RunResult ok = run("validate --chain " + data_file("single_spring.json"));
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("n=0 m=1") != std::string::npos);
  CHECK(ok.output.find("1000") != std::string::npos);

  const RunResult leg = run("validate --posture A");
  CHECK(leg.exit_code == 0);
  CHECK(leg.output.find("n=4 m=13") != std::string::npos);

  const RunResult bad = run("validate --chain " + data_file("bad_compliance.json"));
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("weird") != std::string::npos);
  CHECK(bad.output.find("positive definite") != std::string::npos);
}

TEST_CASE("equilibrium outputs the wrench and stiffness") {
  const RunResult hooke = run("equilibrium --chain " +
                              data_file("single_spring.json") +
                              " --offset 0.002,0,0,0,0,0");
  CHECK(hooke.exit_code == 0);
  CHECK(hooke.output.find("\"converged\": true") != std::string::npos);
  CHECK(hooke.output.find("\"F\": [2.0000000000000004,0,0,0,0,0]") !=
        std::string::npos);

  const RunResult rest = run("equilibrium --chain " +
                             data_file("single_spring.json") +
                             " --offset 0,0,0,0,0,0");
  CHECK(rest.exit_code == 0);
  CHECK(rest.output.find("\"F\": [0,0,0,0,0,0]") != std::string::npos);

  // Unreachable offset: exit code 2, no partial output files.
  const fs::path out = temp_dir() / "unreachable.json";
  fs::remove(out);
  const RunResult unreachable =
      run("equilibrium --chain " + data_file("single_spring.json") +
          " --offset 0,0.01,0,0,0,0 --max-iter 15 --restarts 1 --out " +
          out.string());
  CHECK(unreachable.exit_code == 2);
}

TEST_CASE("sweep writes the CSV and the buckling report atomically") {
  const fs::path dir = temp_dir();
  const fs::path csv = dir / "linear.csv";
  const RunResult linear =
      run("sweep --chain " + data_file("single_spring.json") +
          " --direction 1,0,0,0,0,0 --dmax 4 --step 0.1 --out " + csv.string());
  CHECK(linear.exit_code == 0);
  const std::string body = slurp(csv);
  CHECK(body.rfind("delta_m,force_n,tangent_n_per_m,iterations,restarts,critical_flag\n",
                   0) == 0);
  CHECK(count_lines(body) == 42);  // header + 41 samples
  const std::string report = slurp(dir / "linear.buckling.json");
  CHECK(report.find("\"detected\": false") != std::string::npos);
  CHECK(report.find("\"assumed_geometry\": null") != std::string::npos);
  CHECK(!fs::exists(csv.string() + ".tmp"));
}

TEST_CASE("orthoglide sweep row count matches the default flags") {
  const fs::path dir = temp_dir();
  const fs::path csv = dir / "leg.csv";
  // Default step 0.01 mm to 4 mm = 401 samples; keep runtime modest by
  // sweeping only 1 mm here (101 rows) with the same step.
  const RunResult sweep =
      run("sweep --posture A --dmax 1 --out " + csv.string());
  CHECK(sweep.exit_code == 0);
  CHECK(count_lines(slurp(csv)) == 102);
  const std::string report = slurp(dir / "leg.buckling.json");
  CHECK(report.find("\"assumed_geometry\": {") != std::string::npos);
  CHECK(report.find("bar_length_m") != std::string::npos);
}

TEST_CASE("same seed gives byte-identical artifacts") {
  const fs::path dir = temp_dir();
  const fs::path a = dir / "a.csv";
  const fs::path b = dir / "b.csv";
  const std::string flags = "sweep --posture A --dmax 1.4 --step 0.02 --seed 9 --out ";
  CHECK(run(flags + a.string()).exit_code == 0);
  CHECK(run(flags + b.string()).exit_code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(dir / "a.buckling.json") == slurp(dir / "b.buckling.json"));
}

TEST_CASE("map emits one row per grid point and keeps going on failures") {
  const RunResult grid =
      run("map --chain " + data_file("planar_2r.json") +
          " --grid \"q0=-0.4:0.4:2;q1=-0.4:0.4:2\"");
  CHECK(grid.exit_code == 0);
  CHECK(count_lines(grid.output) == 5);  // header + 4 points
  CHECK(grid.output.find("status") != std::string::npos);
  CHECK(grid.output.find(",ok") != std::string::npos);

  // A single point reproduces the equilibrium command's spectrum.
  const RunResult one =
      run("map --chain " + data_file("series_springs.json") + " --grid \"x=0:0:1\"");
  CHECK(one.exit_code == 0);
  CHECK(one.output.find("666.66666666666") != std::string::npos);

  // Explicit posture points with a directional column.
  const RunResult postures =
      run("map --posture A --points \"0,0,0,0;0,0.5235987755982988,-0.5235987755982988,0\""
          " --direction -1,0,0,0,0,0");
  CHECK(postures.exit_code == 0);
  CHECK(count_lines(postures.output) == 3);
  CHECK(postures.output.find("k_dir") != std::string::npos);
}

TEST_CASE("map rows are independent of the worker count") {
  const std::string spec = "map --chain " + data_file("planar_2r.json") +
                           " --grid \"q0=-0.5:0.5:3;q1=-0.5:0.5:3\" --threads ";
  const RunResult serial = run(spec + "1");
  const RunResult threaded = run(spec + "3");
  CHECK(serial.exit_code == 0);
  CHECK(threaded.exit_code == 0);
  CHECK(serial.output == threaded.output);
}

TEST_CASE("VJMSTIFF_LOG routes notes to stderr without touching artifacts") {
  const fs::path dir = temp_dir();
  const fs::path quiet_csv = dir / "quiet.csv";
  const fs::path chatty_csv = dir / "chatty.csv";
  const std::string tail = "sweep --chain " + data_file("single_spring.json") +
                           " --direction 1,0,0,0,0,0 --dmax 2 --step 0.05 --out ";
  const RunResult quiet = run(tail + quiet_csv.string());
  const std::string with_env = std::string("VJMSTIFF_LOG=info ") +
                               VJMSTIFF_BIN + " " + tail + chatty_csv.string() +
                               " 2>&1";
  RunResult chatty;
  FILE* pipe = popen(with_env.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 512> buffer;
  while (fgets(buffer.data(), buffer.size(), pipe) != nullptr)
    chatty.output += buffer.data();
  chatty.exit_code = WEXITSTATUS(pclose(pipe));
  CHECK(quiet.exit_code == 0);
  CHECK(chatty.exit_code == 0);
  CHECK(chatty.output.find("[vjmstiff]") != std::string::npos);
  CHECK(quiet.output.find("[vjmstiff]") == std::string::npos);
  CHECK(slurp(quiet_csv) == slurp(chatty_csv));
}

TEST_CASE("round trip: emitted numbers parse back exactly") {
  const fs::path dir = temp_dir();
  const fs::path csv = dir / "roundtrip.csv";
  CHECK(run("sweep --chain " + data_file("series_springs.json") +
            " --direction 1,0,0,0,0,0 --dmax 2 --step 0.25 --out " + csv.string())
            .exit_code == 0);
  std::ifstream in(csv);
  std::string header, line;
  std::getline(in, header);
  size_t row = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string delta_text, force_text;
    std::getline(ss, delta_text, ',');
    std::getline(ss, force_text, ',');
    const double delta = std::strtod(delta_text.c_str(), nullptr);
    const double force = std::strtod(force_text.c_str(), nullptr);
    CHECK(delta == row * 0.25e-3);
    // Series stiffness 2000/3: the printed force re-parses to the exact
    // double the solver produced.
    CHECK(force == doctest::Approx(2000.0 / 3.0 * delta).epsilon(1e-12));
    ++row;
  }
  CHECK(row == 9);
}
