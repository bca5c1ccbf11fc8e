#include "studentsim/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "studentsim/config.hpp"
#include "studentsim/engine.hpp"
#include "studentsim/errors.hpp"
#include "studentsim/hashing.hpp"
#include "util.hpp"

namespace studentsim {

namespace {

// Portable draws on top of mt19937_64 (the standard distributions are implementation-defined,
// which would make fixtures differ between standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  int between(int lo, int hi) { return lo + static_cast<int>(unit() * (hi - lo + 1)); }
  bool chance(double p) { return unit() < p; }
  double around(double center, double spread) { return center + (unit() * 2.0 - 1.0) * spread; }

 private:
  std::mt19937_64 engine_;
};

double round1(double x) { return std::round(x * 10.0) / 10.0; }

Question q(std::string stem, std::string a, std::string b, std::string c, std::string d, char key) {
  return {std::move(stem), {std::move(a), std::move(b), std::move(c), std::move(d)}, key};
}

ExamBank build_exam_bank() {
  ExamBank bank;
  bank.topics.push_back(
      {std::string(kDefaultTopicNames[0]),
       {q("Which layout arranges its children in a single row or column?", "LinearLayout",
          "FrameLayout", "TableRow", "GridView", 'A'),
        q("Which attribute sets the direction of a LinearLayout?", "android:gravity",
          "android:orientation", "android:layout_weight", "android:direction", 'B'),
        q("What does the value match_parent mean for a view's width?", "As wide as its content",
          "A fixed 100dp", "As wide as its parent allows", "Half of the screen", 'C'),
        q("Which unit is recommended for view dimensions so they scale across screen densities?",
          "px", "pt", "mm", "dp", 'D'),
        q("Which unit is recommended for text sizes?", "sp", "px", "dp", "in", 'A'),
        q("Which view displays read-only text?", "EditText", "TextView", "Button", "ImageView", 'B'),
        q("Where are layout XML files stored in an Android project?", "res/values", "res/drawable",
          "res/layout", "src/main/java", 'C'),
        q("Which method sets the layout an activity displays?", "setContentView()",
          "inflateLayout()", "loadView()", "showLayout()", 'A'),
        q("What does android:layout_weight control in a LinearLayout?", "Z-order of children",
          "How extra space is distributed among children", "Font weight of text",
          "Touch priority", 'B'),
        q("Which attribute adds space between a view's border and its content?",
          "android:layout_margin", "android:spacing", "android:padding", "android:inset", 'C')}});
  bank.topics.push_back(
      {std::string(kDefaultTopicNames[1]),
       {q("Which interface handles a Button tap?", "View.OnClickListener", "View.OnKeyListener",
          "TextWatcher", "Runnable", 'A'),
        q("Which widget lets the user enter text?", "TextView", "EditText", "Spinner",
          "ProgressBar", 'B'),
        q("Which XML attribute wires a click to an activity method by name?", "android:onTap",
          "android:onPress", "android:onClick", "android:clickHandler", 'C'),
        q("Which widget offers a simple on/off choice with a sliding thumb?", "SeekBar",
          "RatingBar", "Chronometer", "Switch", 'D'),
        q("Which method looks up a view by its ID?", "findViewById()", "getView()", "lookupView()",
          "queryView()", 'A'),
        q("Which class shows a short message that disappears on its own?", "AlertDialog", "Toast",
          "NotificationChannel", "PopupMenu", 'B'),
        q("Which listener reacts to a long press on a view?", "OnClickListener", "OnKeyListener",
          "OnLongClickListener", "OnHoldListener", 'C'),
        q("Which interface observes changes to an EditText's content as the user types?",
          "OnChangeListener", "TextObserver", "InputListener", "TextWatcher", 'D'),
        q("Which widget lets the user pick a value by dragging a thumb along a track?", "SeekBar",
          "CheckBox", "RadioButton", "ToggleButton", 'A'),
        q("Which container makes its RadioButtons mutually exclusive?", "LinearLayout",
          "RadioGroup", "ButtonBar", "TableRow", 'B')}});
  bank.topics.push_back(
      {std::string(kDefaultTopicNames[2]),
       {q("Which lifecycle callback runs first when an activity is created?", "onStart()",
          "onResume()", "onCreate()", "onRestart()", 'C'),
        q("Which callback runs when an activity loses focus but is still partly visible?",
          "onPause()", "onStop()", "onDestroy()", "onCreate()", 'A'),
        q("Which kind of intent names the exact component to start?", "Implicit intent",
          "Explicit intent", "Pending intent", "Sticky intent", 'B'),
        q("Which method starts another activity?", "launch()", "openActivity()", "runActivity()",
          "startActivity()", 'D'),
        q("Which method attaches a key-value pair to an intent?", "putExtra()", "addData()",
          "setValue()", "attach()", 'A'),
        q("In which file must every activity be declared?", "build.gradle", "strings.xml",
          "AndroidManifest.xml", "settings.gradle", 'C'),
        q("Which intent action asks the system to display a URI such as a web page?",
          "ACTION_SEND", "ACTION_VIEW", "ACTION_MAIN", "ACTION_EDIT", 'B'),
        q("Which method closes the current activity?", "close()", "exit()", "stop()", "finish()",
          'D'),
        q("How does a started activity read a String extra sent to it?",
          "getIntent().getStringExtra()", "getExtras().readString()", "intent.loadString()",
          "getBundle().string()", 'A'),
        q("Which callback saves transient UI state before an activity may be destroyed?",
          "onPause()", "onSaveInstanceState()", "onStop()", "onRetainState()", 'B')}});
  bank.topics.push_back(
      {std::string(kDefaultTopicNames[3]),
       {q("Which layout positions children with constraints relative to siblings and the parent?",
          "ConstraintLayout", "LinearLayout", "TableLayout", "AbsoluteLayout", 'A'),
        q("Where should user-visible strings be defined to support localization?", "res/layout",
          "res/values/strings.xml", "MainActivity.java", "AndroidManifest.xml", 'B'),
        q("Which layout stacks its children on top of each other?", "LinearLayout", "GridLayout",
          "FrameLayout", "TableLayout", 'C'),
        q("Which attribute positions a view's content within the view itself?",
          "android:layout_gravity", "android:gravity", "android:align", "android:position", 'B'),
        q("Which attribute positions a child view within its parent LinearLayout?",
          "android:gravity", "android:orientation", "android:layout_gravity",
          "android:alignParent", 'C'),
        q("Which resource folder holds alternative layouts for landscape orientation?",
          "res/layout-land", "res/layout-wide", "res/landscape", "res/layout-rotated", 'A'),
        q("Which container adds vertical scrolling to a single child view?", "ListView",
          "HorizontalScrollView", "ViewPager", "ScrollView", 'D'),
        q("Which resource file conventionally defines reusable colors?", "res/values/colors.xml",
          "res/drawable/colors.xml", "res/layout/colors.xml", "assets/colors.json", 'A'),
        q("Which XML tag reuses one layout file inside another?", "<merge>", "<include>",
          "<import>", "<embed>", 'B'),
        q("Which Android Studio tool previews a layout without running the app?", "Logcat",
          "Profiler", "Layout Editor", "Device File Explorer", 'C')}});
  bank.topics.push_back(
      {std::string(kDefaultTopicNames[4]),
       {q("What does an ArrayAdapter supply to a ListView?",
          "Row views built from items of a data array", "A database connection",
          "Click listeners only", "Scroll animations", 'A'),
        q("Which method connects an adapter to a ListView?", "addAdapter()", "setAdapter()",
          "bindAdapter()", "attachAdapter()", 'B'),
        q("Which built-in layout is commonly used for a single-line text list row?",
          "android.R.layout.activity_main", "android.R.layout.list_content",
          "android.R.layout.simple_list_item_1", "android.R.layout.text_item", 'C'),
        q("Which listener handles taps on ListView rows?", "OnClickListener",
          "OnItemSelectedListener", "OnRowTapListener", "OnItemClickListener", 'D'),
        q("Which adapter method should be called after the underlying data changes?",
          "notifyDataSetChanged()", "refresh()", "invalidateData()", "reload()", 'A'),
        q("Which adapter method is overridden to customize each row's view?", "getItem()",
          "getView()", "getCount()", "getItemId()", 'B'),
        q("Why should getView() reuse its convertView argument?", "To change the list order",
          "To share data between lists", "To avoid inflating a new view for every row",
          "To disable scrolling", 'C'),
        q("Which adapter method reports how many rows the list has?", "size()", "length()",
          "rows()", "getCount()", 'D'),
        q("In onItemClick, which parameter gives the index of the tapped row?", "position", "id",
          "view", "parent", 'A'),
        q("Which widget is the more flexible modern replacement for ListView?", "GridView",
          "RecyclerView", "ScrollView", "ExpandableListView", 'B')}});
  bank.topics.push_back(
      {std::string(kDefaultTopicNames[5]),
       {q("Which API stores small key-value pairs of primitive data?", "SharedPreferences",
          "SQLiteDatabase", "ContentResolver", "FileProvider", 'A'),
        q("Which SharedPreferences.Editor method saves changes asynchronously?", "commit()",
          "apply()", "save()", "flush()", 'B'),
        q("Which helper class manages creating and upgrading an SQLite database?",
          "DatabaseManager", "SQLiteFactory", "SQLiteOpenHelper", "CursorLoader", 'C'),
        q("Which object iterates over the rows returned by an SQLite query?", "Iterator",
          "ResultSet", "RowSet", "Cursor", 'D'),
        q("Which method opens a private file in internal storage for writing?", "openFileOutput()",
          "getFileWriter()", "newFile()", "createOutput()", 'A'),
        q("Which SQLiteOpenHelper callback creates tables the first time the database is opened?",
          "onOpen()", "onCreate()", "onUpgrade()", "onConfigure()", 'B'),
        q("Which class holds column values for an SQLite insert?", "Bundle", "HashSet",
          "ContentValues", "Parcel", 'C'),
        q("Which Jetpack library provides an object-mapping layer over SQLite?", "Retrofit",
          "Glide", "Gson", "Room", 'D'),
        q("Who can read files saved to an app's internal storage by default?", "Only that app",
          "Every installed app", "Apps signed by any developer", "Only system apps", 'A'),
        q("Which SQLiteOpenHelper callback runs when the database version number increases?",
          "onCreate()", "onUpgrade()", "onOpen()", "onMigrate()", 'B')}});
  bank.validate(true);
  return bank;
}

struct KeyItem {
  const char* id;
  Trait trait;
  bool reverse;
};

constexpr std::array<KeyItem, 10> kKeyItems = {{{"bfi01", Trait::Openness, false},
                                                 {"bfi02", Trait::Openness, true},
                                                 {"bfi03", Trait::Conscientiousness, false},
                                                 {"bfi04", Trait::Conscientiousness, true},
                                                 {"bfi05", Trait::Extraversion, false},
                                                 {"bfi06", Trait::Extraversion, true},
                                                 {"bfi07", Trait::Agreeableness, false},
                                                 {"bfi08", Trait::Agreeableness, true},
                                                 {"bfi09", Trait::Neuroticism, false},
                                                 {"bfi10", Trait::Neuroticism, true}}};

ClassEntry smartphone_class() {
  return {"CS65", "Smartphone Programming", {{0, 10, 1}, {2, 10, 1}, {4, 10, 1}, {3, 14, 2}}};
}

const std::array<ClassEntry, 5>& elective_pool() {
  static const std::array<ClassEntry, 5> pool = {
      ClassEntry{"MATH22", "Linear Algebra", {{0, 12, 1}, {2, 12, 1}, {4, 12, 1}}},
      ClassEntry{"PSYC1", "Introduction to Psychology", {{1, 9, 2}, {3, 9, 2}}},
      ClassEntry{"ECON1", "Principles of Economics", {{1, 13, 2}, {3, 11, 2}}},
      ClassEntry{"ENGL5", "Academic Writing", {{0, 15, 1}, {2, 15, 1}}},
      ClassEntry{"COSC30", "Discrete Mathematics", {{1, 16, 2}, {4, 14, 1}}}};
  return pool;
}

bool in_class(const StudentProfile& p, int weekday, int hour, bool& smartphone) {
  for (const auto& c : p.classes)
    for (const auto& s : c.meeting_slots)
      if (s.weekday == weekday && hour >= s.start_hour && hour < s.start_hour + s.duration_hours) {
        smartphone = c.course_code == "CS65";
        return true;
      }
  return false;
}

}  // namespace

const ExamBank& fixture_exam_bank() {
  static const ExamBank bank = build_exam_bank();
  return bank;
}

std::vector<LocationZone> fixture_zones() {
  return {{"library", "main library, quiet study floors", 43.7056, -72.2886, 70.0},
          {"cs building", "computer science building, lecture halls and labs", 43.7068, -72.2870, 60.0},
          {"dining hall", "campus dining hall", 43.7030, -72.2905, 60.0},
          {"dorm", "residence hall", 43.7090, -72.2920, 80.0},
          {"gym", "athletic center", 43.7020, -72.2850, 70.0},
          {"green", "central campus green", 43.7042, -72.2882, 90.0}};
}

std::string fixture_key_map_csv() {
  std::string out = "item_id,trait,polarity,scale_min,scale_max\n";
  for (const auto& item : kKeyItems)
    out += fmt::format("{},{},{},1,5\n", item.id, trait_name(item.trait), item.reverse ? '-' : '+');
  return out;
}

std::vector<FixtureStudent> generate_students(const FixtureOptions& options) {
  Rng rng(options.seed);
  const auto key_map = parse_key_map(fixture_key_map_csv());
  std::vector<FixtureStudent> out;
  for (int i = 1; i <= options.n_students; ++i) {
    FixtureStudent s;
    auto& p = s.profile;
    p.uid = fmt::format("u{:02d}", i);
    p.term_start = options.term_start;
    for (auto t : kTraits) p.big_five.get(t) = round1(1.8 + rng.unit() * 2.8);
    p.classes.push_back(smartphone_class());
    const auto& pool = elective_pool();
    const auto first = static_cast<std::size_t>(rng.between(0, static_cast<int>(pool.size()) - 1));
    p.classes.push_back(pool[first]);
    if (rng.chance(0.5)) p.classes.push_back(pool[(first + 2) % pool.size()]);

    s.record = profile_to_json(p);
    if (i > options.n_students - options.questionnaire_students) {
      // Describe this student by item responses; the stored profile holds the keyed score.
      nlohmann::json answers = nlohmann::json::array();
      std::vector<QuestionnaireResponse> responses;
      for (const auto& item : kKeyItems) {
        const double target = p.big_five.get(item.trait);
        double r = std::clamp(std::round(target + rng.around(0.0, 0.6)), 1.0, 5.0);
        if (item.reverse) r = reflect_response(r, 1.0, 5.0);
        answers.push_back({{"item_id", item.id}, {"response", r}});
        responses.emplace_back(item.id, r);
      }
      p.big_five = score_big_five(responses, key_map);
      s.record = profile_to_json(p);
      s.record.erase("big_five");
      s.record["questionnaire"] = answers;
    }
    out.push_back(std::move(s));
  }
  return out;
}

SensingLogs generate_sensing_logs(const StudentProfile& profile,
                                  const std::vector<LocationZone>& zones,
                                  const FixtureOptions& options) {
  Rng rng(splitmix64(options.seed ^ fnv1a(profile.uid)));
  const auto start = profile.term_start_epoch();
  const auto& b = profile.big_five;
  const bool night_owl = b.conscientiousness < 3.0;
  const double late_prob = 0.01 + (b.neuroticism > 3.5 ? 0.02 : 0.0);
  const double gym_prob = 0.04 + 0.03 * b.extraversion;
  const double offcampus_prob = 0.05 + 0.01 * b.extraversion;

  auto zone_by_label = [&](std::string_view label) -> const LocationZone& {
    for (const auto& z : zones)
      if (z.label == label) return z;
    return zones.front();
  };

  SensingLogs logs;
  logs.activity_csv = "timestamp,activity_inference\n";
  logs.gps_csv = "timestamp,latitude,longitude\n";
  auto emit_gps = [&](std::int64_t t, double lat, double lon) {
    logs.gps_csv += fmt::format("{},{:.6f},{:.6f}\n", t, lat, lon);
  };
  auto emit_act = [&](std::int64_t t, int code) {
    logs.activity_csv += fmt::format("{},{}\n", t, code);
  };

  // A few samples recorded before the term starts, to be discarded by bucketing.
  for (int k = 3; k >= 1; --k) emit_act(start - k * 1800, 0);

  const int days = options.n_weeks * 7;
  for (int d = 0; d < days; ++d) {
    const int weekday = d % 7;
    for (int h = 0; h < 24; ++h) {
      if (rng.chance(0.08)) continue;  // phone off or not sampled: a null cell
      const std::int64_t t0 = start + static_cast<std::int64_t>(d) * 86400 + h * 3600;
      const bool asleep = night_owl ? (h >= 2 && h < 9) : (h < 7);
      const bool quiet = asleep || (night_owl && h < 2);  // in the dorm, rarely moving

      const LocationZone* zone = nullptr;
      bool offcampus = false;
      int code = 0;
      bool smartphone = false;
      if (quiet) {
        zone = &zone_by_label("dorm");
        if (h < 5 && rng.chance(late_prob)) {
          code = 1;
          zone = &zones[static_cast<std::size_t>(rng.between(0, static_cast<int>(zones.size()) - 1))];
        }
      } else if (weekday < 5 && in_class(profile, weekday, h, smartphone)) {
        zone = &zone_by_label(smartphone ? "cs building" : "library");
      } else {
        const bool meal = h == 8 || h == 12 || h == 18;
        const double r = rng.unit();
        if (r < offcampus_prob) {
          offcampus = true;
        } else if (meal && r < 0.6) {
          zone = &zone_by_label("dining hall");
        } else if (r < offcampus_prob + gym_prob) {
          zone = &zone_by_label("gym");
          code = rng.chance(0.5) ? 2 : 1;
        } else if (r < 0.35 + 0.05 * b.conscientiousness) {
          zone = &zone_by_label("library");
        } else if (r < 0.75) {
          zone = &zone_by_label("dorm");
        } else {
          zone = &zone_by_label("green");
        }
        if (code == 0) {
          const double a = rng.unit();
          code = a < 0.70 ? 0 : a < 0.94 ? 1 : a < 0.97 ? 2 : 3;
        }
      }

      for (int k = 0; k < 2; ++k) {
        const int c = (k == 1 && !quiet && rng.chance(0.2)) ? (code == 0 ? 1 : 0) : code;
        emit_act(t0 + rng.between(0, 3599), c);
      }
      if (rng.chance(0.85)) {
        double lat = 0.0, lon = 0.0;
        if (offcampus || zone == nullptr) {
          lat = rng.around(43.6450, 0.01);
          lon = rng.around(-72.3150, 0.01);
        } else {
          const double spread = 0.4 * zone->radius_m / 111000.0;
          lat = rng.around(zone->center_lat, spread);
          lon = rng.around(zone->center_lon, spread);
        }
        const auto t = t0 + rng.between(0, 3599);
        emit_gps(t, lat, lon);
        if (rng.chance(0.01)) emit_gps(t, lat, lon);  // duplicated upload
      }
    }
  }
  // And a couple after the term ends.
  const std::int64_t end = start + static_cast<std::int64_t>(days) * 86400;
  emit_act(end + 600, 1);
  emit_act(end + 7200, 0);
  return logs;
}

std::string generate_ground_truth_csv(const std::vector<StudentProfile>& cohort,
                                      const FixtureOptions& options) {
  Rng rng(options.seed * 0x9E3779B97F4A7C15ULL + 1);
  const SimConfig schedule;
  std::string out = "uid,week,stress,sleep,social\n";
  for (const auto& p : cohort) {
    const auto& b = p.big_five;
    for (int w = 1; w <= options.n_weeks; ++w) {
      const bool exam = schedule.is_exam_week(w) || w == schedule.project_week;
      auto level = [&](double base) {
        return std::clamp(std::round(base + rng.around(0.0, 0.9)), 1.0, 5.0);
      };
      const double stress = level(1.0 + 0.6 * b.neuroticism + (exam ? 0.5 : 0.0));
      const double sleep = level(1.5 + 0.5 * b.conscientiousness - (exam ? 0.3 : 0.0));
      const double social = level(0.8 + 0.7 * b.extraversion);
      std::array<std::string, 3> cells;
      const std::array<double, 3> values = {stress, sleep, social};
      bool any = false;
      for (std::size_t k = 0; k < 3; ++k)
        if (rng.chance(options.truth_density)) {
          cells[k] = fmt::format("{}", values[k]);
          any = true;
        }
      if (any) out += fmt::format("{},{},{},{},{}\n", p.uid, w, cells[0], cells[1], cells[2]);
    }
  }
  return out;
}

nlohmann::json fixture_config_json(const FixtureOptions& options) {
  SimConfig sim;
  sim.n_weeks = options.n_weeks;
  if (options.n_weeks < 10) {
    sim.exam_weeks.clear();
    for (int w = 2; w <= std::min(7, options.n_weeks); ++w) sim.exam_weeks.push_back(w);
    sim.project_week = options.n_weeks;
  }
  AppConfig app;
  app.sim = sim;
  app.provider.live_profile = "openai";
  app.provider.live_profiles["openai"] = {{"base_url", "https://api.openai.com"},
                                          {"path", "/v1/chat/completions"},
                                          {"api_key", "${OPENAI_API_KEY}"}};
  app.provider.live_profiles["gemini"] = {{"base_url", "https://generativelanguage.googleapis.com"},
                                          {"path", "/v1beta/openai/chat/completions"},
                                          {"api_key", "${GEMINI_API_KEY}"}};
  app.paths.key_map = "key_map.csv";
  return app_config_to_json(app);
}

std::vector<std::filesystem::path> write_fixtures(const std::filesystem::path& out_dir,
                                                  const FixtureOptions& options) {
  if (options.n_students < 1) throw ConfigError("fixture cohort needs at least one student");
  if (options.n_weeks < 1) throw ConfigError("fixture term needs at least one week");
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::filesystem::path& rel, const std::string& contents) {
    const auto path = out_dir / rel;
    detail::write_file(path, contents);
    written.push_back(path);
  };

  const auto students = generate_students(options);
  nlohmann::json records = nlohmann::json::array();
  std::vector<StudentProfile> cohort;
  for (const auto& s : students) {
    records.push_back(s.record);
    cohort.push_back(s.profile);
  }
  write("profiles.json", nlohmann::json{{"students", records}}.dump(2) + "\n");
  write("key_map.csv", fixture_key_map_csv());
  const auto zones = fixture_zones();
  write("zones.json", zones_to_json(zones).dump(2) + "\n");
  for (const auto& p : cohort) {
    const auto logs = generate_sensing_logs(p, zones, options);
    write(std::filesystem::path("sensing") / ("activity_" + p.uid + ".csv"), logs.activity_csv);
    write(std::filesystem::path("sensing") / ("gps_" + p.uid + ".csv"), logs.gps_csv);
  }
  write("exam_bank.json", exam_bank_to_json(fixture_exam_bank()).dump(2) + "\n");
  write("ground_truth.csv", generate_ground_truth_csv(cohort, options));
  write("config.json", fixture_config_json(options).dump(2) + "\n");
  return written;
}

}  // namespace studentsim
