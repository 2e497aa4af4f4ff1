use m2o::actors::{GroupConfig, Role, Status};
use m2o::costmodel::reconcile;
use m2o::crypto::{KeySize, Phase};
use m2o::netsim::{run_fresh, AdversaryScript};
use m2o::wire::{self, dump, MessageTag};

#[test]
fn full_size_keys_end_to_end() {
    let cfg = GroupConfig::with_size(3).unwrap();
    let (_, t) = run_fresh(&cfg, KeySize::Full3072, &AdversaryScript::passive(), 42).unwrap();
    assert!(t.all_completed(), "{}", t.render());
    assert!(reconcile(&t, 3).unwrap().is_clean());
    assert!(t.recoverable.is_empty(), "{:?}", t.recoverable);

    // real ciphertexts are larger than the booked sizes, never smaller
    for phase in [Phase::Hgaka, Phase::Hga] {
        assert!(t.wire_bits(phase) > t.payload_bits(phase));
    }
    let pre_hga = t.sends().find(|(_, m)| m.tag == MessageTag::PreHga).unwrap().1;
    assert_eq!(wire::payload_bits(&wire::parse(&pre_hga.bytes).unwrap()), 2544);
    assert_eq!(pre_hga.wire_bits, 8 * (wire::HEADER_LEN as u64 + 2 + 384));
}

#[test]
fn dump_is_parseable_transcript() {
    let cfg = GroupConfig::with_size(5).unwrap();
    let (_, t) = run_fresh(&cfg, KeySize::InsecureTest(512), &AdversaryScript::passive(), 7).unwrap();
    let lines = dump::parse_dump(&t.dump()).unwrap();
    let tags: Vec<MessageTag> = lines.iter().map(|(_, b)| wire::parse(b).unwrap().tag()).collect();
    assert_eq!(tags.iter().filter(|t| **t == MessageTag::HmLink).count(), 5);
    assert_eq!(tags.first(), Some(&MessageTag::HgakaRequest));
    assert_eq!(tags.last(), Some(&MessageTag::HgaShare));
    let times: Vec<u64> = lines.iter().map(|(t, _)| *t).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let server = t.role(Role::AuthServer).next().unwrap().1;
    assert_eq!(server.status, Status::Completed);
}
