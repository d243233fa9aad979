// Copyright 2026 The qpair Authors
// SPDX-License-Identifier: Apache-2.0

use qpair_core::compiler::{
    compile, qft3_reference_schedule, validate_schedule, DiagnosticKind, LayoutPolicy,
    LogicalCircuit, Schedule,
};
use qpair_core::pulse::Species;
use qpair_core::wiregates::Event;

fn cx() -> Schedule {
    compile(
        &LogicalCircuit::parse("CX 0 1").unwrap(),
        &LayoutPolicy::Identity,
    )
    .unwrap()
}

fn kinds(s: &Schedule) -> Vec<DiagnosticKind> {
    validate_schedule(s).into_iter().map(|d| d.kind).collect()
}

#[test]
fn valid_schedules_pass() {
    assert!(validate_schedule(&qft3_reference_schedule()).is_empty());
    assert!(validate_schedule(&cx()).is_empty());
}

#[test]
fn dropped_translation_pulse_is_a_disentanglement_violation() {
    let mut s = cx();
    let k = s
        .events
        .iter()
        .position(|e| matches!(&e.event, Event::Pulse(p) if p.target_species() == Species::B))
        .unwrap();
    s.events.remove(k);
    assert_eq!(kinds(&s), vec![DiagnosticKind::Disentanglement]);
}

#[test]
fn misplaced_mediator_is_an_adjacency_violation() {
    let text = cx().to_trace();
    let line = text
        .lines()
        .find(|l| l.contains("displace in id=M"))
        .unwrap()
        .to_string();
    let moved = line.replace(" y=1", " y=9");
    let s = Schedule::parse_trace(&text.replace(&line, &moved)).unwrap();
    let d = validate_schedule(&s);
    assert_eq!(d[0].kind, DiagnosticKind::Adjacency, "{d:?}");
}

#[test]
fn decreasing_modes_are_rejected() {
    let mut s = cx();
    let last = s.events.len() - 1;
    s.events[last].mode = 0;
    assert_eq!(kinds(&s), vec![DiagnosticKind::Ordering]);
}

#[test]
fn unknown_atoms_are_register_errors() {
    let text = cx()
        .to_trace()
        .replacen("displace out id=A", "displace out id=Z", 1);
    let s = Schedule::parse_trace(&text).unwrap();
    assert_eq!(kinds(&s), vec![DiagnosticKind::Register]);
}
