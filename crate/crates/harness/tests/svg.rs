use greenhouse_core::episode::{simulate_episode, EpisodeMeta, StepView};
use greenhouse_core::weather::{synth_weather, WeatherProfile};
use greenhouse_core::{ControlInput, EpisodeLog, ModelParams, State, SAMPLE_INTERVAL_S};
use harness::svg::default_bounds;
use harness::{emit_svg, Bound, Channel};

fn episode(steps: usize) -> EpisodeLog {
    let w = synth_weather(&WeatherProfile::default(), 1).unwrap();
    simulate_episode(
        State::seedling(),
        |v: &StepView<'_>| Ok::<_, greenhouse_core::Error>(ControlInput::new(0.0, 1.0, 10.0 * (v.k % 3) as f64)),
        &w.samples,
        steps,
        &ModelParams::default(),
        SAMPLE_INTERVAL_S,
        EpisodeMeta { seed: 1, scenario: "a<b&c".into(), controller: "test".into() },
    )
    .unwrap()
}

fn parse(svg: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(svg).expect("well-formed XML")
}

#[test]
fn charts_are_well_formed_svg() {
    let log = episode(96);
    let svg = emit_svg(&log, &Channel::ALL, &default_bounds()).unwrap();
    let doc = parse(&svg);
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.tag_name().namespace(), Some("http://www.w3.org/2000/svg"));
    assert_eq!(root.attribute("version"), Some("1.1"));
    let count = |tag: &str| doc.descendants().filter(|n| n.has_tag_name(tag)).count();
    assert_eq!(count("g"), Channel::ALL.len());
    assert_eq!(count("path"), Channel::ALL.len());
    assert_eq!(count("line"), default_bounds().len());
    for line in doc.descendants().filter(|n| n.has_tag_name("line")) {
        assert!(line.attribute("stroke-dasharray").is_some());
    }
    // Outputs span every record, inputs only the applied steps.
    let paths: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("path")).collect();
    let points = |i: usize| paths[i].attribute("d").unwrap().matches(['M', 'L']).count();
    assert_eq!(points(0), 97);
    assert_eq!(points(4), 96);
    let texts: Vec<&str> = doc.descendants().filter(|n| n.is_text()).filter_map(|n| n.text()).collect();
    assert!(texts.iter().any(|t| t.contains("a<b&c")));
    assert!(texts.contains(&"Indoor temperature (°C)"));
}

#[test]
fn single_point_gives_one_marker() {
    let log = episode(0);
    let svg = emit_svg(&log, &[Channel::Temperature], &[Bound { channel: Channel::Temperature, value: 15.0 }]).unwrap();
    let doc = parse(&svg);
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("circle")).count(), 1);
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("path")).count(), 0);
}

#[test]
fn bounds_stay_on_their_channel() {
    let log = episode(8);
    let svg = emit_svg(&log, &[Channel::DryWeight, Channel::Heating], &default_bounds()).unwrap();
    assert_eq!(parse(&svg).descendants().filter(|n| n.has_tag_name("line")).count(), 0);
}

#[test]
fn empty_inputs_are_errors() {
    let log = episode(4);
    assert_eq!(emit_svg(&log, &[], &[]).unwrap_err().category(), "data");
    let empty = EpisodeLog { meta: EpisodeMeta::default(), records: Vec::new() };
    assert!(emit_svg(&empty, &[Channel::Radiation], &[]).is_err());
}
