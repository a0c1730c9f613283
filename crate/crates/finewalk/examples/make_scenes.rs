//! Regenerates the scene fixture files under `scenes/` at the workspace
//! root. The canonical constructors are the source of truth; run this after
//! changing any of them.

use std::path::Path;

use finewalk::scene::canonical;

fn main() {
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes");
    std::fs::create_dir_all(&out).expect("create scenes directory");
    let scenes = [
        ("ball.json", canonical::unit_ball::<f64>(3)),
        ("shell.json", canonical::shell(0.5)),
        ("swiss.json", canonical::swiss_cheese()),
        ("roadrunner_thin.json", canonical::road_runner_thin()),
        ("roadrunner_fat.json", canonical::road_runner_fat()),
    ];
    for (name, scene) in scenes {
        scene.save(&out.join(name)).expect(name);
        println!("wrote scenes/{name}");
    }
}
