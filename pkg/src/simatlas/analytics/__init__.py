"""Offline APDU log and binary blob analysis.

BCD and TLV codecs, Luhn validation, and a sliding-window scanner that
finds IMSI/ICCID/IMEI-SV identifiers embedded in opaque payloads such
as proactive binary SMS.
"""

from .bcd import (
    NonDecimalNibble,
    decode_bcd_swapped,
    encode_bcd_swapped,
    luhn_check_digit,
    luhn_valid,
    encode_imsi,
    decode_imsi,
    encode_iccid,
    decode_iccid,
)
from .tlv import TlvNode, TlvError, Truncated, IndefiniteLength, parse_tlv, serialize_tlv, extract_proactive_sms
from .scanner import IdentifierHit, scan_identifiers
from .mcc import MCC_TABLE, KNOWN_MCCS

__all__ = [
    "NonDecimalNibble",
    "decode_bcd_swapped",
    "encode_bcd_swapped",
    "luhn_check_digit",
    "luhn_valid",
    "encode_imsi",
    "decode_imsi",
    "encode_iccid",
    "decode_iccid",
    "TlvNode",
    "TlvError",
    "Truncated",
    "IndefiniteLength",
    "parse_tlv",
    "serialize_tlv",
    "extract_proactive_sms",
    "IdentifierHit",
    "scan_identifiers",
    "MCC_TABLE",
    "KNOWN_MCCS",
]
