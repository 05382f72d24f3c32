mod common;

use axum::http::{Method, StatusCode};

use grantdesk::analytics::{Dimension, StatReport};
use grantdesk::corpus::simulate;
use grantdesk::model::CallId;

use common::*;

const DIMENSIONS: [Dimension; 4] = [Dimension::Institution, Dimension::ResearchArea, Dimension::AgencyType, Dimension::Call];

fn reports(platform: &grantdesk::platform::Platform) -> Vec<StatReport> {
    DIMENSIONS.iter().map(|d| platform.acceptance_by(*d).unwrap()).collect()
}

#[test]
fn nothing_published_means_no_data() {
    let (platform, _) = seeded(ts(2026, 1, 1));
    let err = platform.acceptance_by(Dimension::Institution).unwrap_err();
    assert_eq!(err.code(), "NO_PUBLISHED_DATA");
}

#[test]
fn publishing_a_call_only_grows_other_reports() {
    let (platform, _) = seeded(ts(2026, 1, 1));
    // call-02 runs earlier in the year, so it is simulated first.
    let (early, late) = (CallId::from("call-02"), CallId::from("call-01"));
    simulate(&platform, std::slice::from_ref(&early), 4).unwrap();
    let before = reports(&platform);
    let rebuttal_before = platform.rebuttal_effect(&early).unwrap();
    assert_eq!(platform.rebuttal_effect(&late).unwrap_err().code(), "NO_PUBLISHED_DATA");

    simulate(&platform, std::slice::from_ref(&late), 4).unwrap();
    let after = reports(&platform);
    assert_eq!(platform.rebuttal_effect(&early).unwrap(), rebuttal_before);

    let by_call = &after[3];
    assert_eq!(by_call.groups.len(), 2);
    let early_group = by_call.groups.iter().find(|g| g.key == "call-02").unwrap();
    assert_eq!(early_group, &before[3].groups[0]);

    for (old, new) in before.iter().zip(&after) {
        for g in &old.groups {
            let grown = new.groups.iter().find(|n| n.key == g.key).unwrap_or_else(|| panic!("{} lost {}", old.dimension, g.key));
            assert!(grown.n_submitted >= g.n_submitted && grown.n_funded >= g.n_funded, "{} {}", old.dimension, g.key);
        }
    }
}

#[test]
fn reports_are_bounded_and_consistent() {
    let (platform, corpus) = seeded(ts(2026, 1, 1));
    let calls: Vec<CallId> = corpus.body.calls.iter().map(|c| c.id.clone()).collect();
    simulate(&platform, &calls, 6).unwrap();
    for report in reports(&platform) {
        for g in &report.groups {
            assert!(g.n_funded <= g.n_submitted);
            assert!((0.0..=1.0).contains(&g.acceptance_rate));
        }
    }
    let by_call = platform.acceptance_by(Dimension::Call).unwrap();
    let submitted: u64 = by_call.groups.iter().map(|g| g.n_submitted as u64).sum();
    let funded: u64 = by_call.groups.iter().map(|g| g.n_funded as u64).sum();
    assert_eq!(submitted, 20);
    assert!(funded <= submitted);
}

#[test]
fn reports_are_pure_functions_of_the_store() {
    let run = || {
        let (platform, corpus) = seeded(ts(2026, 1, 1));
        let calls: Vec<CallId> = corpus.body.calls.iter().map(|c| c.id.clone()).collect();
        simulate(&platform, &calls, 8).unwrap();
        let mut bytes: Vec<String> = reports(&platform).iter().map(StatReport::to_csv).collect();
        bytes.push(platform.reviewer_expertise_effect().unwrap().to_csv());
        bytes.push(platform.rebuttal_effect(&calls[0]).unwrap().to_csv());
        (platform, bytes)
    };
    let (platform, first) = run();
    let (_, second) = run();
    assert_eq!(first, second);
    let again: Vec<String> = reports(&platform).iter().map(StatReport::to_csv).collect();
    assert_eq!(again, first[..4]);
}

#[tokio::test]
async fn analytics_routes_serve_json_and_csv() {
    let (platform, corpus) = seeded(ts(2026, 1, 1));
    let calls: Vec<CallId> = corpus.body.calls.iter().map(|c| c.id.clone()).collect();
    simulate(&platform, &calls, 1).unwrap();
    let app = app(&platform);

    let json = send(&app, Method::GET, "/analytics/acceptance?dimension=agency_type", None, None).await;
    assert_eq!(json.status, StatusCode::OK, "{}", json.text);
    assert_eq!(json.json()["dimension"], "agency_type");

    let csv = send(&app, Method::GET, "/analytics/acceptance?dimension=call&format=csv", None, None).await;
    assert_eq!(csv.status, StatusCode::OK);
    assert_eq!(csv.text, platform.acceptance_by(Dimension::Call).unwrap().to_csv());

    let bad = send(&app, Method::GET, "/analytics/acceptance?dimension=gender", None, None).await;
    assert_eq!(bad.status, StatusCode::UNPROCESSABLE_ENTITY);

    let expertise = send(&app, Method::GET, "/analytics/expertise", None, None).await;
    assert_eq!(expertise.status, StatusCode::OK, "{}", expertise.text);
    let rebuttal = send(&app, Method::GET, "/analytics/rebuttal?call=call-01", None, None).await;
    assert_eq!(rebuttal.status, StatusCode::OK, "{}", rebuttal.text);

    for body in [&json.text, &csv.text, &expertise.text, &rebuttal.text] {
        for p in &corpus.body.proposals {
            assert!(!has_number(body, &p.requested_total.0.to_string()), "budget in analytics output");
        }
    }
}
