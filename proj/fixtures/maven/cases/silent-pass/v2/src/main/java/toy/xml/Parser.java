package toy.xml;

public class Parser {
    public static void setLegacyMode(boolean on) {
        return;
    }

    public static String parse(String xml) {
        return xml;
    }

    public static String text(String xml) {
        return xml;
    }
}
