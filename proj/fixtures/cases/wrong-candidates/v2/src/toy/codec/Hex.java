package toy.codec;

public class Hex {

    public static String encode(String text) {
        return text;
    }

    public static int length(String text) {
        return text.length();
    }
}
