"""Regenerates tests/data/pii_fixtures.json.

Offsets come from str.index on the literal expected value, and card cases
are checked with an independent Luhn implementation, so the fixture never
depends on the C++ scanner it is used to test.
"""
import json
import pathlib


def luhn(digits):
    total = 0
    for i, ch in enumerate(reversed(digits)):
        d = int(ch)
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


def digits_of(s):
    return "".join(c for c in s if c.isdigit())


# (text, [(label, value, occurrence)]); occurrence picks the nth match of value.
POSITIVE = [
    ("contact me at a.b@test.org please", [("email", "a.b@test.org", 0)]),
    ("Email JOHN.DOE+news@mail.example.co.uk now", [("email", "JOHN.DOE+news@mail.example.co.uk", 0)]),
    ("reach support_team@corp-net.io", [("email", "support_team@corp-net.io", 0)]),
    ("ADMIN@EXAMPLE.COM", [("email", "ADMIN@EXAMPLE.COM", 0)]),
    ("call +1 415-555-2671", [("phone", "+1 415-555-2671", 0)]),
    ("my number is 415-555-2671", [("phone", "415-555-2671", 0)]),
    ("dial 415.555.2671 today", [("phone", "415.555.2671", 0)]),
    ("office line 4155552671", [("phone", "4155552671", 0)]),
    ("ring +44 20 7946 0958", [("phone", "+44 20 7946 0958", 0)]),
    ("text 555-0199 anytime", [("phone", "555-0199", 0)]),
    ("call me at 555 123 4567", [("phone", "555 123 4567", 0)]),
    ("server at 192.168.1.1 is down", [("ipv4", "192.168.1.1", 0)]),
    ("ping 8.8.8.8", [("ipv4", "8.8.8.8", 0)]),
    ("edge 255.255.255.255 broadcast", [("ipv4", "255.255.255.255", 0)]),
    ("host 10.0.0.254.", [("ipv4", "10.0.0.254", 0)]),
    ("addr 0.0.0.0", [("ipv4", "0.0.0.0", 0)]),
    ("the ip is 172.16.254.1, thanks", [("ipv4", "172.16.254.1", 0)]),
    ("IP 256.1.1.1 vs 1.1.1.1", [("ipv4", "1.1.1.1", 0)]),
    ("card 4111 1111 1111 1111 on file", [("credit_card_like", "4111 1111 1111 1111", 0)]),
    ("cc 4111-1111-1111-1111", [("credit_card_like", "4111-1111-1111-1111", 0)]),
    ("amex 378282246310005", [("credit_card_like", "378282246310005", 0)]),
    ("pay with 5555555555554444", [("credit_card_like", "5555555555554444", 0)]),
    ("visa 4012888888881881", [("credit_card_like", "4012888888881881", 0)]),
    ("card number 6011111111111117", [("credit_card_like", "6011111111111117", 0)]),
    ("4111111111111111", [("credit_card_like", "4111111111111111", 0)]),
    ("ssn 123-45-6789 on the form", [("ssn_like", "123-45-6789", 0)]),
    ("ID:078-05-1120.", [("ssn_like", "078-05-1120", 0)]),
    ("her SSN is 219-09-9999", [("ssn_like", "219-09-9999", 0)]),
    ("mixed a.b@test.org and 10.1.2.3", [("email", "a.b@test.org", 0), ("ipv4", "10.1.2.3", 0)]),
    ("call 415-555-2671 or mail x@y.io", [("phone", "415-555-2671", 0), ("email", "x@y.io", 0)]),
    ("ssn 123-45-6789, card 4111111111111111, ip 1.2.3.4",
     [("ssn_like", "123-45-6789", 0), ("credit_card_like", "4111111111111111", 0), ("ipv4", "1.2.3.4", 0)]),
]

NEGATIVE = [
    "hello world",
    "IP 256.1.1.1 is invalid",
    "version 1.2.3.4.5 released",
    "version 300.1.1.1",
    "10.0.0 is incomplete",
    "card 4111 1111 1111 1112",
    "number 4111111111111112",
    "card 1234 5678 9012 3456",
    "ssn 123-45-67890",
    "1234-56-789",
    "ssn-like 000-00-000",
    "user at example dot com",
    "email me @ home",
    "a@b",
    "x@y.c",
    "email: john.doe(at)example.com",
    "The year 2023 had 365 days",
    "call 555-12",
    "order #12345 shipped",
    "temperature 98.6 degrees",
    "ratio 3.14159",
    "date 2024-01-15",
    "serial ABC-123-4567X",
    "route 66 is long",
    "phone 12345",
    "account 0000",
    "call +1",
    "price is $1,299.99",
    "coordinates 45.5, -122.6",
    "Room 101 at 9:30",
    "",
]


def locate(text, value, occurrence):
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(value, start + 1)
    return start


def main():
    cases = []
    for text, expected in POSITIVE:
        spans = []
        for label, value, occurrence in expected:
            if label == "credit_card_like":
                assert luhn(digits_of(value)), value
            start = locate(text, value, occurrence)
            spans.append({"label": label, "start": start, "end": start + len(value)})
        spans.sort(key=lambda s: s["start"])
        cases.append({"text": text, "spans": spans})
    for text in NEGATIVE:
        cases.append({"text": text, "spans": []})
    # Luhn failures must really fail the checksum.
    for text in ["card 4111 1111 1111 1112", "number 4111111111111112", "card 1234 5678 9012 3456"]:
        assert not luhn(digits_of(text)), text
    out = pathlib.Path(__file__).resolve().parents[2] / "tests" / "data" / "pii_fixtures.json"
    out.write_text(json.dumps({"cases": cases}, indent=2) + "\n")
    print(f"{len(POSITIVE)} positive, {len(NEGATIVE)} negative -> {out}")


if __name__ == "__main__":
    main()
