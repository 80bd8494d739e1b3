use compnav_web::{check_value, Demo};

const PROGRAM: &str = "seen = explore_scene(target='chair')
boxes = detect(image=obs, query='chair')
nav = navigate_to(target=boxes)
done = is_found(target=nav)
";

#[test]
fn scene_description_matches_the_fixture() {
    let demo = Demo::load("minimal", 0).unwrap();
    let v = demo.scene_value();
    assert_eq!(v["grid"].as_array().unwrap().len(), 8);
    assert_eq!(v["grid"][0], "########");
    assert_eq!(v["objects"][0]["category"], "chair");
    assert_eq!(v["episodes"][0]["task"], "ovon");
}

#[test]
fn episodes_run_and_report_a_path() {
    let demo = Demo::load("minimal", 0).unwrap();
    let v = demo.run_value(0, 0.4).unwrap();
    assert_eq!(v["success"], true);
    let path = v["path"].as_array().unwrap();
    assert_eq!(path.len() as u64, v["steps"].as_u64().unwrap() + 1);
    assert_eq!(path[0][0], 0.375);
    assert!(v["goals"][0]["trace"].as_array().unwrap().len() >= 2);
    assert!(demo.run_value(3, 0.4).is_err());
    assert!(demo.run_value(0, 1.5).is_err());
}

#[test]
fn programs_are_checked() {
    let ok = check_value(PROGRAM);
    assert_eq!(ok["ok"], true);
    assert!(ok["normalized"]
        .as_str()
        .unwrap()
        .contains("explore_scene(target='chair')"));

    let unknown = check_value("x = fly(to='moon')\n");
    assert_eq!(unknown["ok"], false);
    assert_eq!(unknown["errors"][0]["line"], 1);

    let broken = check_value("x = detect(image=obs, query='chair'\n");
    assert_eq!(broken["ok"], false);
}

#[test]
fn custom_programs_drive_the_agent() {
    let demo = Demo::load("minimal", 0).unwrap();
    let v = demo.program_value(0, PROGRAM).unwrap();
    assert_eq!(v["reached"], true, "{v}");
    assert_eq!(v["trace"].as_array().unwrap().len(), 5);
    assert!(demo.program_value(0, "x = fly(to='moon')").is_err());
}

#[test]
fn generated_scenes_load() {
    let demo = Demo::load("generated:multion", 3).unwrap();
    let v = demo.scene_value();
    assert_eq!(v["episodes"].as_array().unwrap().len(), 4);
    assert_eq!(v["episodes"][0]["goals"].as_array().unwrap().len(), 3);
    assert!(Demo::load("atlantis", 0).is_err());
    assert!(Demo::load("generated:flying", 0).is_err());
}
