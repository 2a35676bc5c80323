//! Strategies shared by the property suites and the acceptance target.
#![allow(dead_code)]

use gridshield::codec::{GooseFrame, MacAddress, RawFrame, SvFrame};
use gridshield::codec::{GOOSE_ETHERTYPE, SV_ETHERTYPE};
use gridshield::sdn::{Action, DefaultAction, FlowEntry, FlowModCommand, FlowTable, MatchFields};
use proptest::prelude::*;

pub const SPS: u32 = 4_000;
pub const PORTS: u8 = 8;

pub fn mac() -> impl Strategy<Value = MacAddress> {
    any::<[u8; 6]>().prop_map(MacAddress)
}

pub fn multicast() -> impl Strategy<Value = MacAddress> {
    any::<[u8; 6]>().prop_map(|mut b| {
        b[0] |= 1;
        MacAddress(b)
    })
}

prop_compose! {
    pub fn goose_frame()(
        dst in multicast(),
        src in mac(),
        app_id in any::<u16>(),
        gocb_ref in "[A-Za-z0-9/$_]{0,64}",
        ttl in 1u32..,
        st_num in 1u32..,
        sq_num in any::<u32>(),
        test in any::<bool>(),
        timestamp in any::<u64>(),
        dataset_ref in "\\PC{0,32}",
        all_data in prop::collection::vec(any::<bool>(), 1..16),
    ) -> GooseFrame {
        GooseFrame { dst, src, app_id, gocb_ref, time_allowed_to_live: ttl, st_num, sq_num, test, timestamp, dataset_ref, all_data }
    }
}

prop_compose! {
    pub fn sv_frame()(
        dst in mac(),
        src in mac(),
        sv_id in "\\PC{0,32}",
        smp_cnt in 0u16..(SPS as u16),
        currents in any::<[i32; 3]>(),
        voltages in any::<[i32; 3]>(),
    ) -> SvFrame {
        SvFrame { dst, src, sv_id, smp_cnt, currents, voltages }
    }
}

pub fn frame(ethertype: u16, app_id: u16) -> RawFrame {
    let mut b = vec![0u8; 24];
    b[0] = 0x01;
    b[6..12].copy_from_slice(&[0, 0x30, 0xa7, 0, 0, 2]);
    b[12..14].copy_from_slice(&ethertype.to_be_bytes());
    b[14..16].copy_from_slice(&app_id.to_be_bytes());
    RawFrame::new(b)
}

pub fn match_fields() -> impl Strategy<Value = MatchFields> {
    (
        prop::option::of(1..=PORTS),
        prop::option::of(prop::sample::select(vec![GOOSE_ETHERTYPE, SV_ETHERTYPE])),
        prop::option::of(0u16..3),
    )
        .prop_map(|(ingress_port, ethertype, app_id)| MatchFields { ingress_port, ethertype, src_mac: None, app_id })
        .prop_filter("non-empty", |m| !m.is_empty())
}

pub fn forward_entry() -> impl Strategy<Value = FlowEntry> {
    (0u16..8, match_fields(), prop::collection::btree_set(1..=PORTS, 1..4))
        .prop_map(|(p, m, ports)| FlowEntry::new(p, m, ports.into_iter().map(Action::Forward).collect()))
}

pub fn table() -> impl Strategy<Value = FlowTable> {
    prop::collection::vec(forward_entry(), 0..12).prop_map(|entries| {
        let mut t = FlowTable::new(DefaultAction::Drop);
        for e in entries {
            if let Ok(next) = t.apply_flow_mod(FlowModCommand::Add, &e) {
                t = next;
            }
        }
        t
    })
}

pub fn traffic() -> impl Strategy<Value = (RawFrame, u8)> {
    (prop::sample::select(vec![GOOSE_ETHERTYPE, SV_ETHERTYPE]), 0u16..3, 1..=PORTS)
        .prop_map(|(e, a, p)| (frame(e, a), p))
}

/// Forward ports in output order.
pub fn forward_ports(actions: &[Action]) -> Vec<u8> {
    actions
        .iter()
        .filter_map(|a| match a {
            Action::Forward(p) => Some(*p),
            _ => None,
        })
        .collect()
}

pub fn golden(name: &str) -> Vec<u8> {
    let path = format!("{}/fixtures/{name}.hex", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    let text = text.trim();
    (0..text.len()).step_by(2).map(|i| u8::from_str_radix(&text[i..i + 2], 16).unwrap()).collect()
}
