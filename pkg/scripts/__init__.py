#
# For licensing see accompanying LICENSE.md file.
#
