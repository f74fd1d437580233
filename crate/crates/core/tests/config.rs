use fsi_core::config::*;

#[test]
fn embedded_default_matches_code_defaults() {
    assert_eq!(RunConfig::from_toml(DEFAULT_CONFIG).unwrap(), RunConfig::default());
}

#[test]
fn partial_files_fill_in_defaults() {
    let cfg = RunConfig::from_toml("[geometry]\nnx = 16\nny = 8\n").unwrap();
    assert_eq!(cfg.geometry.nx, 16);
    assert_eq!(cfg.geometry.lx, 1.0);
    assert_eq!(cfg.sweep, SweepSettings::default());
}

#[test]
fn errors_name_the_line() {
    let err = RunConfig::from_toml("[sweep]\nbeta_max = 50.0\nn_samples = \"many\"\n").unwrap_err();
    assert!(err.to_string().contains("line 3"), "{err}");
    assert!(RunConfig::from_toml("[sweep]\nbogus = 1\n").is_err());
    assert!(RunConfig::from_toml("[geometry]\nnx = 7\n").is_err());
}
