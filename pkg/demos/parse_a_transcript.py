"""Walk through parsing one annotated picture-description transcript.

The input format keeps the participant's disfluencies as inline markers;
the parser turns them into typed events and leaves the tokens clean.
"""

from adscreen.chat import RawChatDocument, clean_text, event_counts, parse_chat

DOCUMENT = """\
@Begin
@Languages:\teng
@Participants:\tPAR Participant, INV Investigator
@ID:\teng|demo|PAR|74;|female|||Participant|||
*INV:\ttell me everything you see going on in that picture .
*PAR:\twell the the sink is overflowing (.) onto the floor .
*PAR:\tthe boy is <taking taking> [/] taking cookies from the jar .
*PAR:\tand the xxx stool is about to tip over .
*PAR:\this mother doesn't notice [+ exc] .
@End
"""


def main() -> None:
    transcript = parse_chat(RawChatDocument.from_text(DOCUMENT, source_id="demo"))

    print(f"participant utterances: {len(transcript.participant_utterances())}")
    for utt in transcript.participant_utterances():
        events = ", ".join(e.kind.value for e in utt.events) or "none"
        print(f"  {utt.speaker}: {' '.join(utt.tokens)}")
        print(f"    events: {events}")

    print("\nevent totals:")
    for kind, count in sorted(event_counts(transcript).items()):
        print(f"  {kind.value}: {count}")

    # this is the exact token stream the feature extractors consume
    print("\nmodel-ready text:")
    print(" ", " ".join(clean_text(transcript)))


if __name__ == "__main__":
    main()
