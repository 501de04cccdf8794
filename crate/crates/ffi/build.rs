use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();

    let mut config = cbindgen::Config::default();
    config.language = cbindgen::Language::C;
    config.include_guard = Some("THETABODY_H".to_string());
    config.documentation = true;
    config.documentation_style = cbindgen::DocumentationStyle::C;
    config.sys_includes = vec!["stddef.h".to_string(), "stdint.h".to_string()];
    config.no_includes = true;
    config.enumeration.prefix_with_name = true;
    config.cpp_compat = true;

    let bindings = cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("unable to generate C bindings");

    let out = PathBuf::from(&crate_dir).join("include");
    std::fs::create_dir_all(&out).expect("cannot create include directory");
    bindings.write_to_file(out.join("thetabody.h"));

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=build.rs");
}
